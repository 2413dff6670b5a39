//! JSON documents for moment specifications and initial states, and the
//! CSV conventions shared by every subcommand.

use std::io::Write;
use std::path::Path;

use ertl_core::measures::{CircleBase, CircleFunctional, MomentSpec, RealWeight, Support};
use ertl_core::C64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LabError, Result};

/// `[re, im]`.
pub type Pair = [f64; 2];

pub fn to_c64(p: Pair) -> C64 {
    C64::new(p[0], p[1])
}

pub fn to_pair(z: C64) -> Pair {
    [z.re, z.im]
}

/// Parses `re,im` or a bare real.
pub fn parse_complex(s: &str) -> core::result::Result<C64, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |x: &str| x.parse::<f64>().map_err(|e| format!("bad number '{x}': {e}"));
    match parts.as_slice() {
        [re] => Ok(C64::new(num(re)?, 0.0)),
        [re, im] => Ok(C64::new(num(re)?, num(im)?)),
        _ => Err(format!("expected 're,im', got '{s}'")),
    }
}

/// Reads `arg` as inline JSON when it starts with `{`, otherwise as a path.
pub fn read_json<T: for<'de> Deserialize<'de>>(arg: &str) -> Result<T> {
    let text = if arg.trim_start().starts_with('{') { arg.to_owned() } else { std::fs::read_to_string(arg)? };
    Ok(serde_json::from_str(&text)?)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<Pair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_min: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<Pair>>,
}

/// Serialized [`MomentSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecDocument {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_id: Option<String>,
    #[serde(default)]
    pub params: SpecParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Pair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Pair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

fn need<T>(value: Option<T>, what: &str) -> Result<T> {
    value.ok_or_else(|| LabError::usage(format!("spec is missing '{what}'")))
}

impl SpecDocument {
    pub fn to_spec(&self) -> Result<MomentSpec> {
        let zero = [0.0, 0.0];
        match self.kind.as_str() {
            "real_line_weighted" => {
                let delta = need(self.params.delta, "params.delta")?;
                let wq = need(self.params.q, "params.q")?;
                let weight = match need(self.weight_id.as_deref(), "weight_id")? {
                    "example1" => RealWeight::Example1 { delta, q: wq },
                    "example2" => RealWeight::Example2 { delta, q: wq },
                    other => return Err(LabError::usage(format!("unknown real-line weight '{other}'"))),
                };
                let p = to_c64(self.p.unwrap_or([1.0, 0.0]));
                let q = to_c64(self.q.unwrap_or([wq, 0.0]));
                Ok(MomentSpec::real_line(weight, Support::HALF_LINE, p, q)?)
            }
            "unit_circle_weighted" => {
                let base = match self.params.mass {
                    Some(mass) if mass > 0.0 => {
                        CircleBase::LebesgueWithMass { mass, angle: self.params.angle.unwrap_or(0.0) }
                    }
                    _ => CircleBase::Lebesgue,
                };
                let functional = match need(self.weight_id.as_deref(), "weight_id")? {
                    "circle_lebesgue" => CircleFunctional::Opuc,
                    "circle_kernel" => CircleFunctional::Kernel { w: to_c64(need(self.params.w, "params.w")?) },
                    other => return Err(LabError::usage(format!("unknown circle weight '{other}'"))),
                };
                let q = to_c64(self.q.or(self.params.q.map(|q| [q, 0.0])).unwrap_or(zero));
                let p = self.p.map(to_c64).unwrap_or(q.conj());
                Ok(MomentSpec::circle(base, functional, p, q)?)
            }
            "discrete" => {
                let nodes = need(self.nodes.clone(), "nodes")?;
                let weights = need(self.weights.clone(), "weights")?;
                let p = to_c64(self.p.unwrap_or(zero));
                let q = to_c64(self.q.unwrap_or(zero));
                Ok(MomentSpec::discrete(nodes, weights, p, q)?)
            }
            "explicit_table" => {
                let k_min = need(self.params.k_min, "params.k_min")?;
                let values = need(self.params.values.clone(), "params.values")?;
                Ok(MomentSpec::explicit(k_min, values.into_iter().map(to_c64).collect())?)
            }
            other => Err(LabError::usage(format!("unknown spec kind '{other}'"))),
        }
    }

    pub fn from_spec(spec: &MomentSpec) -> Self {
        let mut doc = SpecDocument {
            kind: String::new(),
            weight_id: None,
            params: SpecParams::default(),
            p: None,
            q: None,
            nodes: None,
            weights: None,
        };
        match spec {
            MomentSpec::RealLine { weight, p, q, .. } => {
                doc.kind = "real_line_weighted".into();
                let (id, delta, wq) = match weight {
                    RealWeight::Example1 { delta, q } => ("example1", delta, q),
                    RealWeight::Example2 { delta, q } => ("example2", delta, q),
                };
                doc.weight_id = Some(id.into());
                doc.params.delta = Some(*delta);
                doc.params.q = Some(*wq);
                doc.p = Some(to_pair(*p));
                doc.q = Some(to_pair(*q));
            }
            MomentSpec::Circle { base, functional, q } => {
                doc.kind = "unit_circle_weighted".into();
                if let CircleBase::LebesgueWithMass { mass, angle } = base {
                    doc.params.mass = Some(*mass);
                    doc.params.angle = Some(*angle);
                }
                doc.weight_id = Some(match functional {
                    CircleFunctional::Opuc => "circle_lebesgue".into(),
                    CircleFunctional::Kernel { w } => {
                        doc.params.w = Some(to_pair(*w));
                        "circle_kernel".into()
                    }
                });
                doc.p = Some(to_pair(q.conj()));
                doc.q = Some(to_pair(*q));
            }
            MomentSpec::Discrete { nodes, weights, p, q } => {
                doc.kind = "discrete".into();
                doc.nodes = Some(nodes.clone());
                doc.weights = Some(weights.clone());
                doc.p = Some(to_pair(*p));
                doc.q = Some(to_pair(*q));
            }
            MomentSpec::Explicit { k_min, values } => {
                doc.kind = "explicit_table".into();
                doc.params.k_min = Some(*k_min);
                doc.params.values = Some(values.iter().copied().map(to_pair).collect());
            }
        }
        doc
    }
}

/// Initial data for `simulate` and `verify-lax`. Lattice systems use
/// `beta`/`alpha` (`α_1..α_N`, `α_1 = 0`); `cd` uses `c`/`d`; `schur` uses `a`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Vec<Pair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<Pair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<Pair>>,
}

impl InitDocument {
    /// `β_1..β_N` and `α_2..α_N`.
    pub fn lattice(&self) -> Result<(Vec<C64>, Vec<C64>)> {
        let beta: Vec<C64> = need(self.beta.clone(), "beta")?.into_iter().map(to_c64).collect();
        let alpha: Vec<C64> = need(self.alpha.clone(), "alpha")?.into_iter().map(to_c64).collect();
        if beta.is_empty() || alpha.len() != beta.len() {
            return Err(LabError::usage("init needs N betas and N alphas (α_1..α_N)"));
        }
        if alpha[0] != C64::new(0.0, 0.0) {
            return Err(LabError::usage("α_1 must be zero"));
        }
        Ok((beta, alpha[1..].to_vec()))
    }

    pub fn cd(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let c = need(self.c.clone(), "c")?;
        let d = need(self.d.clone(), "d")?;
        if c.is_empty() || c.len() != d.len() {
            return Err(LabError::usage("init needs c_1..c_N and d_1..d_N"));
        }
        Ok((c, d))
    }

    pub fn verblunsky(&self) -> Result<Vec<C64>> {
        Ok(need(self.a.clone(), "a")?.into_iter().map(to_c64).collect())
    }
}

/// Shortest round-trip-exact rendering: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// `# version=…, seed=…, config-hash=…`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub version: &'static str,
    pub seed: Option<u64>,
    pub config_hash: String,
}

impl Metadata {
    pub fn new(config: &impl Serialize, seed: Option<u64>) -> Result<Self> {
        let canonical = serde_json::to_vec(config)?;
        let digest = Sha256::digest(&canonical);
        let config_hash = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
        Ok(Self { version: env!("CARGO_PKG_VERSION"), seed, config_hash })
    }

    pub fn line(&self) -> String {
        let seed = self.seed.map_or_else(|| "none".to_owned(), |s| s.to_string());
        format!("# version={}, seed={}, config-hash={}", self.version, seed, self.config_hash)
    }
}

/// A CSV table held in memory until written.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self, meta: &Metadata) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        writeln!(out, "{}", meta.line())?;
        {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(&self.header)?;
            for row in &self.rows {
                w.write_record(row)?;
            }
            w.flush()?;
        }
        Ok(out)
    }
}

/// Reads a CSV written by [`Table::render`], skipping `#` lines.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let header = reader.headers()?.iter().map(str::to_owned).collect();
    let rows = reader
        .records()
        .map(|r| r.map(|rec| rec.iter().map(str::to_owned).collect()))
        .collect::<core::result::Result<Vec<Vec<String>>, _>>()?;
    Ok((header, rows))
}

/// Writes `bytes` to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes)?,
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_arguments() {
        assert_eq!(parse_complex("1,0"), Ok(C64::new(1.0, 0.0)));
        assert_eq!(parse_complex("-0.5, 2"), Ok(C64::new(-0.5, 2.0)));
        assert_eq!(parse_complex("3"), Ok(C64::new(3.0, 0.0)));
        assert!(parse_complex("1,2,3").is_err());
        assert!(parse_complex("x").is_err());
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 2f64.sqrt(), -1e-300, 6.02e23] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn spec_documents_round_trip() {
        let specs = [
            MomentSpec::example1(1.0, 2.0).unwrap(),
            MomentSpec::example2(0.5, 3.0).unwrap(),
            MomentSpec::circle(
                CircleBase::LebesgueWithMass { mass: 0.3, angle: 1.1 },
                CircleFunctional::Kernel { w: C64::from_polar(1.0, 0.7) },
                C64::new(0.3, -0.4),
                C64::new(0.3, 0.4),
            )
            .unwrap(),
            MomentSpec::discrete(vec![1.0, 2.0], vec![1.0, 1.0], C64::new(0.0, 0.0), C64::new(0.0, 0.0)).unwrap(),
            MomentSpec::explicit(-1, vec![C64::new(1.0, 0.0); 3]).unwrap(),
        ];
        for spec in specs {
            let doc = SpecDocument::from_spec(&spec);
            let text = serde_json::to_string(&doc).unwrap();
            let back: SpecDocument = serde_json::from_str(&text).unwrap();
            assert_eq!(back.to_spec().unwrap(), spec);
        }
    }

    #[test]
    fn spec_document_shape() {
        let doc: SpecDocument = serde_json::from_str(
            r#"{"kind":"real_line_weighted","weight_id":"example1","params":{"delta":1,"q":2},"p":[1,0],"q":[2,0]}"#,
        )
        .unwrap();
        assert_eq!(doc.to_spec().unwrap(), MomentSpec::example1(1.0, 2.0).unwrap());
        let bad: SpecDocument = serde_json::from_str(r#"{"kind":"discrete","nodes":[1,1],"weights":[1,1]}"#).unwrap();
        assert!(matches!(bad.to_spec(), Err(LabError::Core(_))));
    }

    #[test]
    fn init_requires_vanishing_first_alpha() {
        let doc: InitDocument = serde_json::from_str(r#"{"beta":[[1,0]],"alpha":[[0,0]]}"#).unwrap();
        assert_eq!(doc.lattice().unwrap(), (vec![C64::new(1.0, 0.0)], vec![]));
        let doc: InitDocument = serde_json::from_str(r#"{"beta":[[1,0]],"alpha":[[1,0]]}"#).unwrap();
        assert!(doc.lattice().is_err());
    }

    #[test]
    fn metadata_is_stable() {
        let a = Metadata::new(&("x", 1), Some(7)).unwrap();
        let b = Metadata::new(&("x", 1), Some(7)).unwrap();
        assert_eq!(a, b);
        assert!(a.line().starts_with("# version="));
        assert_ne!(a.config_hash, Metadata::new(&("x", 2), Some(7)).unwrap().config_hash);
    }
}
