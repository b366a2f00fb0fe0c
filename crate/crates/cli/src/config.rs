//! Experiment configuration: the JSON schema and its validation into core
//! objects. Sites are numbered from 1 in the file and from 0 in the library.

use std::fmt;
use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};

use recomb_core::integrate::default_step;
use recomb_core::space::DEFAULT_STATE_CAP;
use recomb_core::{
    DenseMeasure, Error as CoreError, FrameSystem, Legend, MasterEquation, ProductSpace,
    SimilarityMatrix, Word,
};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Simplex tolerance for initial measures; anything within it is renormalized.
pub const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub space: SpaceSpec,
    pub frames: Vec<Vec<usize>>,
    pub legend: LegendSpec,
    pub initial: InitialSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_cap: Option<usize>,
    #[serde(default)]
    pub integrator: IntegratorSpec,
    #[serde(default)]
    pub particles: ParticleSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceSpec {
    AlphabetSizes(Vec<usize>),
    /// Symbol names per site; letter `j` of site `i` prints as `alphabets[i][j]`.
    Alphabets(Vec<Vec<String>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Uniform {
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LegendSpec {
    /// `"uniform"`: `φ ≡ 1` on every frame.
    Uniform(Uniform),
    PerFrame(Vec<FrameLegend>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FrameLegend {
    /// Rows and columns indexed by frame segments in codec order.
    Matrix(Vec<Vec<f64>>),
    Constant(f64),
}

/// A letter given either by index or by symbol name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Letter {
    Index(usize),
    Symbol(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    /// Probabilities over all of `X` in codec order.
    Explicit(Vec<f64>),
    /// Product of the given site marginals.
    Product(Vec<Vec<f64>>),
    UniformOn(Vec<Vec<Letter>>),
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorSpec {
    /// Defaults to `0.1 / Σ_I max φ_I`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub t_end: f64,
    pub snapshot_stride: usize,
    pub tv_tol: f64,
}

impl Default for IntegratorSpec {
    fn default() -> Self {
        IntegratorSpec {
            dt: None,
            t_end: 50.0,
            snapshot_stride: 1,
            tv_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParticleSpec {
    pub n: usize,
    pub seed: u64,
    /// Defaults to `[0, integrator.t_end]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot_times: Option<Vec<f64>>,
}

impl Default for ParticleSpec {
    fn default() -> Self {
        ParticleSpec {
            n: 1000,
            seed: 0,
            snapshot_times: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| CliError::Config(format!("malformed config: {e}")))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "schema_version: expected {SCHEMA_VERSION}, found {}",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Builds and cross-validates the core objects.
    pub fn build(&self) -> Result<Experiment, CliError> {
        let (sizes, names) = match &self.space {
            SpaceSpec::AlphabetSizes(s) => (s.clone(), None),
            SpaceSpec::Alphabets(a) => {
                for (i, site) in a.iter().enumerate() {
                    let mut sorted = site.clone();
                    sorted.sort();
                    sorted.dedup();
                    if sorted.len() != site.len() {
                        return Err(CliError::Config(format!(
                            "space.alphabets[{i}]: repeated symbol"
                        )));
                    }
                }
                (a.iter().map(Vec::len).collect(), Some(a.clone()))
            }
        };
        let space = ProductSpace::with_cap(sizes, self.state_cap.unwrap_or(DEFAULT_STATE_CAP))
            .map_err(|e| field_error("space", e))?;
        let names = Names { names };

        let frames = self
            .frames
            .iter()
            .enumerate()
            .map(|(k, f)| {
                f.iter()
                    .map(|&s| {
                        if s == 0 || s > space.n_sites() {
                            Err(CliError::Config(format!(
                                "frames[{k}]: site {s} outside 1..={}",
                                space.n_sites()
                            )))
                        } else {
                            Ok(s - 1)
                        }
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        let system =
            FrameSystem::new(space.clone(), &frames).map_err(|e| field_error("frames", e))?;
        if system.len() != frames.len() {
            return Err(CliError::Config("frames: repeated frame".into()));
        }

        let legend = match &self.legend {
            LegendSpec::Uniform(_) => Legend::uniform(&system),
            LegendSpec::PerFrame(specs) => {
                if specs.len() != system.len() {
                    return Err(CliError::Config(format!(
                        "legend: {} entries for {} frames",
                        specs.len(),
                        system.len()
                    )));
                }
                let matrices = specs
                    .iter()
                    .zip(system.frames())
                    .enumerate()
                    .map(|(k, (entry, frame))| {
                        let field = format!("legend[{k}] (frame {})", one_based(frame.sites()));
                        let m = match entry {
                            FrameLegend::Constant(c) => {
                                SimilarityMatrix::constant(&space, frame.clone(), *c)
                            }
                            FrameLegend::Matrix(rows) => {
                                let d = rows.len();
                                if rows.iter().any(|r| r.len() != d) {
                                    return Err(CliError::Config(format!(
                                        "{field}: matrix is not square"
                                    )));
                                }
                                SimilarityMatrix::new(&space, frame.clone(), rows.concat())
                            }
                        };
                        m.map_err(|e| field_error(&field, e))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Legend::new(&system, matrices).map_err(|e| field_error("legend", e))?
            }
        };
        let equation = MasterEquation::new(system, legend).map_err(|e| field_error("legend", e))?;

        let initial = self.initial_measure(&space, &names)?;

        let i = &self.integrator;
        if let Some(dt) = i.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(CliError::Config(format!(
                    "integrator.dt: must be positive, got {dt}"
                )));
            }
        }
        if !(i.t_end.is_finite() && i.t_end >= 0.0) {
            return Err(CliError::Config(format!(
                "integrator.t_end: must be nonnegative, got {}",
                i.t_end
            )));
        }
        if i.snapshot_stride == 0 {
            return Err(CliError::Config(
                "integrator.snapshot_stride: must be at least 1".into(),
            ));
        }
        if !(i.tv_tol.is_finite() && i.tv_tol >= 0.0) {
            return Err(CliError::Config(format!(
                "integrator.tv_tol: must be nonnegative, got {}",
                i.tv_tol
            )));
        }
        if let Some(times) = &self.particles.snapshot_times {
            if times.iter().any(|t| !(t.is_finite() && *t >= 0.0))
                || times.windows(2).any(|w| w[1] < w[0])
            {
                return Err(CliError::Config(
                    "particles.snapshot_times: must be sorted, finite and nonnegative".into(),
                ));
            }
        }

        Ok(Experiment {
            config: self.clone(),
            space,
            names,
            equation,
            initial,
        })
    }

    fn initial_measure(
        &self,
        space: &ProductSpace,
        names: &Names,
    ) -> Result<DenseMeasure, CliError> {
        match &self.initial {
            InitialSpec::Explicit(p) => {
                if p.len() != space.size() {
                    return Err(CliError::Config(format!(
                        "initial.explicit: {} entries for {} states",
                        p.len(),
                        space.size()
                    )));
                }
                let p = simplex_point("initial.explicit", p)?;
                DenseMeasure::new(space.clone(), p).map_err(|e| field_error("initial.explicit", e))
            }
            InitialSpec::Product(marginals) => {
                if marginals.len() != space.n_sites() {
                    return Err(CliError::Config(format!(
                        "initial.product: {} marginals for {} sites",
                        marginals.len(),
                        space.n_sites()
                    )));
                }
                let fixed = marginals
                    .iter()
                    .enumerate()
                    .map(|(i, m)| {
                        if m.len() != space.alphabet_size(i) {
                            return Err(CliError::Config(format!(
                                "initial.product[{}]: {} entries for {} letters",
                                i + 1,
                                m.len(),
                                space.alphabet_size(i)
                            )));
                        }
                        simplex_point(&format!("initial.product[{}]", i + 1), m)
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                DenseMeasure::product(space.clone(), &fixed)
                    .map_err(|e| field_error("initial.product", e))
            }
            InitialSpec::UniformOn(words) => {
                let words = words
                    .iter()
                    .enumerate()
                    .map(|(k, w)| {
                        names
                            .word(space, w)
                            .map_err(|m| CliError::Config(format!("initial.uniform_on[{k}]: {m}")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                DenseMeasure::uniform_on(space.clone(), &words)
                    .map_err(|e| field_error("initial.uniform_on", e))
            }
            InitialSpec::Uniform => Ok(DenseMeasure::uniform(space.clone())),
        }
    }
}

/// Checks nonnegativity and `|Σ p − 1| ≤ SIMPLEX_TOL`, renormalizing (with a
/// warning) any residual drift.
fn simplex_point(field: &str, p: &[f64]) -> Result<Vec<f64>, CliError> {
    if let Some((i, v)) = p
        .iter()
        .enumerate()
        .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
    {
        return Err(CliError::Config(format!(
            "{field}: entry {i} is {v}, expected a nonnegative number"
        )));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > SIMPLEX_TOL {
        return Err(CliError::Config(format!(
            "{field}: entries sum to {total}, not 1"
        )));
    }
    if total != 1.0 {
        warn!("{field}: entries sum to {total}; renormalizing");
        return Ok(p.iter().map(|v| v / total).collect());
    }
    Ok(p.to_vec())
}

fn field_error(field: &str, e: CoreError) -> CliError {
    match e {
        CoreError::CapExceeded { .. } => CliError::Cap(format!("{field}: {e}")),
        // The field name already identifies the frame in 1-based form.
        CoreError::InvalidSimilarity { reason, .. } => {
            CliError::Config(format!("{field}: {reason}"))
        }
        e => CliError::Config(format!("{field}: {e}")),
    }
}

/// `{1,2}` for library sites `[0, 1]`.
pub fn one_based(sites: &[usize]) -> String {
    let inner: Vec<String> = sites.iter().map(|s| (s + 1).to_string()).collect();
    format!("{{{}}}", inner.join(","))
}

/// Letter symbols, when the config names them.
#[derive(Debug, Clone, PartialEq)]
pub struct Names {
    names: Option<Vec<Vec<String>>>,
}

impl Names {
    pub fn word(&self, space: &ProductSpace, letters: &[Letter]) -> Result<Word, String> {
        if letters.len() != space.n_sites() {
            return Err(format!(
                "{} letters for {} sites",
                letters.len(),
                space.n_sites()
            ));
        }
        let mut out = Vec::with_capacity(letters.len());
        for (i, l) in letters.iter().enumerate() {
            let idx = match l {
                Letter::Index(j) => *j,
                Letter::Symbol(s) => match &self.names {
                    Some(n) => n[i]
                        .iter()
                        .position(|x| x == s)
                        .ok_or_else(|| format!("site {}: unknown symbol {s:?}", i + 1))?,
                    None => s
                        .parse()
                        .map_err(|_| format!("site {}: {s:?} is not a letter index", i + 1))?,
                },
            };
            if idx >= space.alphabet_size(i) {
                return Err(format!(
                    "site {}: letter {idx} outside 0..{}",
                    i + 1,
                    space.alphabet_size(i)
                ));
            }
            out.push(idx);
        }
        Ok(Word::new(out))
    }

    /// Parses `0,1`, `(0,1)` or `A C` style words.
    pub fn parse_word(&self, space: &ProductSpace, text: &str) -> Result<Word, String> {
        let trimmed = text.trim().trim_start_matches('(').trim_end_matches(')');
        let letters: Vec<Letter> = trimmed
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| Letter::Symbol(t.to_string()))
            .collect();
        self.word(space, &letters)
            .map_err(|m| format!("word {text:?}: {m}"))
    }

    pub fn display<'a>(&'a self, word: &'a Word) -> WordDisplay<'a> {
        WordDisplay { names: self, word }
    }
}

pub struct WordDisplay<'a> {
    names: &'a Names,
    word: &'a Word,
}

impl fmt::Display for WordDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, &l) in self.word.letters().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            match &self.names.names {
                Some(n) => write!(f, "{}", n[i][l])?,
                None => write!(f, "{l}")?,
            }
        }
        write!(f, ")")
    }
}

/// A validated configuration together with the objects it describes.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub space: ProductSpace,
    pub names: Names,
    pub equation: MasterEquation,
    pub initial: DenseMeasure,
}

impl Experiment {
    pub fn step(&self) -> f64 {
        self.config
            .integrator
            .dt
            .unwrap_or_else(|| default_step(&self.equation))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAIR: &str = r#"{
        "schema_version": 1,
        "space": {"alphabet_sizes": [2, 2]},
        "frames": [[1]],
        "legend": "uniform",
        "initial": {"explicit": [0.5, 0.0, 0.0, 0.5]}
    }"#;

    #[test]
    fn round_trip_is_identity() {
        let cfg = ExperimentConfig::parse(PAIR).unwrap();
        let again = ExperimentConfig::parse(&cfg.to_json()).unwrap();
        assert_eq!(cfg, again);

        let named = r#"{
            "schema_version": 1,
            "space": {"alphabets": [["A", "B"], ["x", "y", "z"]]},
            "frames": [[1], [2], [1, 2]],
            "legend": [{"constant": 2.0}, {"matrix": [[1, 0.5, 0.25], [0.5, 1, 0.125], [0.25, 0.125, 1]]}, {"constant": 0.1}],
            "initial": {"uniform_on": [["A", "x"], [1, 2]]},
            "state_cap": 100,
            "integrator": {"dt": 0.001, "t_end": 3.0, "snapshot_stride": 7, "tv_tol": 1e-8},
            "particles": {"n": 10, "seed": 3, "snapshot_times": [0.5, 1.0]},
            "output": {"dir": "elsewhere"}
        }"#;
        let cfg = ExperimentConfig::parse(named).unwrap();
        assert_eq!(cfg, ExperimentConfig::parse(&cfg.to_json()).unwrap());
        cfg.build().unwrap();
    }

    #[test]
    fn near_simplex_is_renormalized_and_far_is_rejected() {
        let near = PAIR.replace("0.5, 0.0, 0.0, 0.5", "0.5, 0.0, 0.0, 0.5000000001");
        let exp = ExperimentConfig::parse(&near).unwrap().build().unwrap();
        assert!((exp.initial.probs().iter().sum::<f64>() - 1.0).abs() < 1e-15);

        let far = PAIR.replace("0.5, 0.0, 0.0, 0.5", "0.5, 0.0, 0.0, 0.6");
        let err = ExperimentConfig::parse(&far).unwrap().build().unwrap_err();
        assert!(err.to_string().contains("initial.explicit"));
    }

    #[test]
    fn asymmetric_legend_names_the_frame() {
        let bad = PAIR.replace("\"uniform\"", r#"[{"matrix": [[1, 2], [1, 1]]}]"#);
        let err = ExperimentConfig::parse(&bad).unwrap().build().unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
        assert!(err.to_string().contains("legend[0] (frame {1})"), "{err}");
    }

    #[test]
    fn bad_fields_are_named() {
        let cases = [
            (PAIR.replace("[[1]]", "[[3]]"), "frames[0]"),
            (
                PAIR.replace("\"schema_version\": 1", "\"schema_version\": 9"),
                "schema_version",
            ),
            (PAIR.replace("[2, 2]", "[2, 0]"), "space"),
        ];
        for (text, field) in cases {
            let err = ExperimentConfig::parse(&text)
                .and_then(|c| c.build())
                .unwrap_err();
            assert!(err.to_string().contains(field), "{err}");
        }
        let capped = PAIR.replace("\"legend\"", "\"state_cap\": 3, \"legend\"");
        let err = ExperimentConfig::parse(&capped)
            .unwrap()
            .build()
            .unwrap_err();
        assert!(matches!(err, CliError::Cap(_)));
    }

    #[test]
    fn words_parse_with_and_without_names() {
        let exp = ExperimentConfig::parse(PAIR).unwrap().build().unwrap();
        let w = exp.names.parse_word(&exp.space, "(1,0)").unwrap();
        assert_eq!(w.letters(), &[1, 0]);
        assert_eq!(exp.names.display(&w).to_string(), "(1,0)");
        assert!(exp.names.parse_word(&exp.space, "1 2").is_err());
        assert!(exp.names.parse_word(&exp.space, "1").is_err());
    }
}
