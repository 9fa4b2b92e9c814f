//! File formats: complex numbers as `{"re", "im"}` objects, problem documents,
//! JSON reports with a fixed 17-significant-digit float format, CSV traces and
//! atomic writes.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::spectrum::{build_spectrum, ControlProblem, InputVector, SpectrumDescriptor};
use crate::C64;

/// Wire form of a complex number. Plain JSON numbers are accepted as reals.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
enum ComplexRepr {
    Pair { re: f64, im: f64 },
    Real(f64),
}

impl From<ComplexRepr> for C64 {
    fn from(r: ComplexRepr) -> Self {
        match r {
            ComplexRepr::Pair { re, im } => C64::new(re, im),
            ComplexRepr::Real(re) => C64::new(re, 0.0),
        }
    }
}

#[derive(Serialize)]
struct ComplexOut {
    re: f64,
    im: f64,
}

/// `#[serde(with = "cplx")]` for a single [`C64`].
pub mod cplx {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> std::result::Result<S::Ok, S::Error> {
        ComplexOut { re: z.re, im: z.im }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<C64, D::Error> {
        ComplexRepr::deserialize(d).map(Into::into)
    }
}

/// `#[serde(with = "cplx_vec")]` for `Vec<C64>`.
pub mod cplx_vec {
    use super::*;
    use serde::ser::SerializeSeq;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for z in v {
            seq.serialize_element(&ComplexOut { re: z.re, im: z.im })?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<C64>, D::Error> {
        Vec::<ComplexRepr>::deserialize(d).map(|v| v.into_iter().map(Into::into).collect())
    }
}

/// Pretty JSON formatter that prints every float with 17 significant digits.
#[derive(Default)]
struct FixedFloatFormatter {
    inner: serde_json::ser::PrettyFormatter<'static>,
}

impl serde_json::ser::Formatter for FixedFloatFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        write!(writer, "{}", format_float(value))
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        write!(writer, "{}", format_float(value as f64))
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> std::io::Result<()> {
        self.inner.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> std::io::Result<()> {
        self.inner.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_object_value(w)
    }
}

/// 17 significant digits in scientific notation, valid as a JSON number.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

/// Serializes a report with the fixed float format.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloatFormatter::default());
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

/// Writes `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, to_json_string(value)?.as_bytes())
}

/// Minimal CSV builder; cells are already formatted.
#[derive(Debug, Clone, Default)]
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn with_header(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self { text }
    }

    pub fn row<I: IntoIterator<Item = String>>(&mut self, cells: I) {
        let line: Vec<String> = cells.into_iter().collect();
        self.text.push_str(&line.join(","));
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.text.as_bytes())
    }
}

/// Row-major `re,im` cell pairs, one matrix row per line, no header.
pub fn matrix_csv(m: &CMatrix) -> Csv {
    let mut csv = Csv::default();
    for i in 0..m.dim() {
        csv.row(
            m.row(i)
                .iter()
                .flat_map(|z| [format_float(z.re), format_float(z.im)]),
        );
    }
    csv
}

/// JSON schema of a control problem.
///
/// ```json
/// {"spectrum": {"preset": {"heat": {"n": 5}}} | {"explicit": [{"re": 0, "im": 1}, ...]},
///  "b": [...], "x0": [...], "t1": 0.1, "T": 0.08}
/// ```
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDocument {
    pub spectrum: SpectrumDescriptor,
    #[serde(with = "cplx_vec")]
    pub b: Vec<C64>,
    #[serde(with = "cplx_vec")]
    pub x0: Vec<C64>,
    pub t1: f64,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub settle_lag: Option<f64>,
}

impl ProblemDocument {
    pub fn from_problem(p: &ControlProblem) -> Self {
        Self {
            spectrum: p.spectrum().descriptor(),
            b: p.input().coefficients().to_vec(),
            x0: p.x0().to_vec(),
            t1: p.t1(),
            settle_lag: Some(p.settle_lag()),
        }
    }

    /// Expands presets, validates the spectrum and checks lengths.
    pub fn into_problem(self) -> Result<ControlProblem> {
        let schema = |path: &str, message: String| Error::Schema {
            path: path.to_string(),
            message,
        };
        let n = match &self.spectrum {
            SpectrumDescriptor::Preset(p) => p.len(),
            SpectrumDescriptor::Explicit(list) => list.len(),
        };
        if self.b.len() != n || self.x0.len() != n {
            return Err(schema(
                "$",
                format!(
                    "inconsistent lengths: spectrum has {n} eigenvalues, b has {}, x0 has {}",
                    self.b.len(),
                    self.x0.len()
                ),
            ));
        }
        let (spectrum_desc, b, x0, riesz_default) = match self.spectrum {
            SpectrumDescriptor::Preset(p) => {
                let riesz = p.riesz_like();
                (SpectrumDescriptor::Preset(p), self.b, self.x0, riesz)
            }
            SpectrumDescriptor::Explicit(list) => {
                // keep (λ_j, b_j, x0_j) together when sorting by |λ|
                let mut modes: Vec<(C64, C64, C64)> = list
                    .into_iter()
                    .zip(self.b)
                    .zip(self.x0)
                    .map(|((l, b), x)| (l, b, x))
                    .collect();
                modes.sort_by(|a, b| a.0.norm().total_cmp(&b.0.norm()));
                let (l, (b, x)): (Vec<C64>, (Vec<C64>, Vec<C64>)) =
                    modes.into_iter().map(|(l, b, x)| (l, (b, x))).unzip();
                (SpectrumDescriptor::Explicit(l), b, x, false)
            }
        };
        let spectrum =
            build_spectrum(&spectrum_desc).map_err(|e| schema("$.spectrum", e.to_string()))?;
        let settle_lag = match self.settle_lag {
            Some(t) => t,
            None if riesz_default => 0.0,
            None => {
                return Err(schema(
                    "$.T",
                    "settling lag T is required for explicit spectra".into(),
                ))
            }
        };
        let input = InputVector::new(b).map_err(|e| schema("$.b", e.to_string()))?;
        ControlProblem::new(spectrum, input, x0, self.t1, settle_lag)
            .map_err(|e| schema("$", e.to_string()))
    }
}

/// Parses a JSON document, reporting line and column on syntax errors.
pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str, origin: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Schema {
        path: origin.to_string(),
        message: format!("line {}, column {}: {e}", e.line(), e.column()),
    })
}

pub fn load_problem(path: &Path) -> Result<ControlProblem> {
    let text = fs::read_to_string(path)?;
    let doc: ProblemDocument = parse_json(&text, &path.display().to_string())?;
    doc.into_problem()
}

pub fn problem_to_json(p: &ControlProblem) -> Result<String> {
    to_json_string(&ProblemDocument::from_problem(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::SpectrumPreset;

    #[test]
    fn float_format_round_trips() {
        for x in [
            0.0,
            -1.5,
            std::f64::consts::PI,
            1e-300,
            6.02214076e23,
            f64::MIN_POSITIVE,
        ] {
            let s = format_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            assert!(serde_json::from_str::<f64>(&s).is_ok(), "{s}");
        }
    }

    #[test]
    fn minimal_singleton_document() {
        let doc = r#"{"spectrum": {"explicit": [{"re": -1, "im": 0}]}, "b": [1], "x0": [{"re": 1, "im": 0}], "t1": 1, "T": 0}"#;
        let p = parse_json::<ProblemDocument>(doc, "inline")
            .unwrap()
            .into_problem()
            .unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.spectrum().eigenvalues()[0], C64::new(-1.0, 0.0));
    }

    #[test]
    fn mismatched_lengths_named() {
        let doc =
            r#"{"spectrum": {"explicit": [1, 2]}, "b": [1, 1, 1], "x0": [1, 1], "t1": 1, "T": 0}"#;
        let err = parse_json::<ProblemDocument>(doc, "inline")
            .unwrap()
            .into_problem()
            .unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("2 eigenvalues") && msg.contains("b has 3"),
            "{msg}"
        );
    }

    #[test]
    fn heat_preset_expands() {
        let doc = r#"{"spectrum": {"preset": {"heat": {"n": 3}}}, "b": [1, 1, 1], "x0": [1, 0.5, 0.25], "t1": 0.1, "T": 0.08}"#;
        let p = parse_json::<ProblemDocument>(doc, "inline")
            .unwrap()
            .into_problem()
            .unwrap();
        let pi2 = std::f64::consts::PI.powi(2);
        assert_eq!(p.spectrum().eigenvalues()[2], C64::new(-9.0 * pi2, 0.0));
        assert_eq!(p.spectrum().preset(), Some(&SpectrumPreset::Heat { n: 3 }));
    }

    #[test]
    fn settle_lag_defaults_for_presets_only() {
        let preset = r#"{"spectrum": {"preset": {"imaginary_ladder": {"n": 1}}}, "b": [1], "x0": [1], "t1": 1}"#;
        let p = parse_json::<ProblemDocument>(preset, "inline")
            .unwrap()
            .into_problem()
            .unwrap();
        assert_eq!(p.settle_lag(), 0.0);
        let explicit = r#"{"spectrum": {"explicit": [1]}, "b": [1], "x0": [1], "t1": 1}"#;
        let err = parse_json::<ProblemDocument>(explicit, "inline")
            .unwrap()
            .into_problem()
            .unwrap_err();
        assert!(err.to_string().contains("$.T"));
    }

    #[test]
    fn explicit_modes_sorted_jointly() {
        let doc = r#"{"spectrum": {"explicit": [3, 1]}, "b": [30, 10], "x0": [300, 100], "t1": 1, "T": 0}"#;
        let p = parse_json::<ProblemDocument>(doc, "inline")
            .unwrap()
            .into_problem()
            .unwrap();
        assert_eq!(p.input().coefficients()[0], C64::new(10.0, 0.0));
        assert_eq!(p.x0()[0], C64::new(100.0, 0.0));
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = parse_json::<ProblemDocument>("{\n  \"spectrum\": ,\n}", "bad.json").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn problem_round_trip() {
        let doc = r#"{"spectrum": {"preset": {"strip_perturbed": {"n": 2}}}, "b": [1, {"re": 0.5, "im": -0.25}], "x0": [0.1, 0.2], "t1": 6.283185307179586, "T": 0}"#;
        let p = parse_json::<ProblemDocument>(doc, "inline")
            .unwrap()
            .into_problem()
            .unwrap();
        let text = problem_to_json(&p).unwrap();
        let q = parse_json::<ProblemDocument>(&text, "roundtrip")
            .unwrap()
            .into_problem()
            .unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "two");
    }
}
