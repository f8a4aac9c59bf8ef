use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use num_complex::Complex64;
use qaoa::mixer::{cached_mixer, mixer_custom, mixer_x};
use qaoa::problems::{CnfFormula, Graph};
use qaoa::{build_cost_table, mixer_clique, mixer_grover, mixer_ring, BasisSet, CostTable, Mixer, Orientation, QaoaError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProblemKind {
    Maxcut,
    Ksat,
    Dks,
    Kvc,
    Table,
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    /// Number of qubits (inferred from the graph or formula when omitted).
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long, value_enum)]
    pub problem: ProblemKind,
    /// Edge list: one `u v` pair per line, `#` starts a comment.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// DIMACS CNF formula.
    #[arg(long)]
    pub cnf: Option<PathBuf>,
    /// Whitespace-separated objective values in basis order.
    #[arg(long)]
    pub cost_table: Option<PathBuf>,
    /// Hamming weight of the feasible subspace.
    #[arg(long)]
    pub k: Option<u32>,
    /// Treat a cost table as a minimization objective.
    #[arg(long)]
    pub minimize: bool,
    /// Generate a G(n, p) graph or random k-SAT formula from --seed.
    #[arg(long, requires = "seed")]
    pub random_instance: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 0.5)]
    pub edge_probability: f64,
    /// Clauses per variable for random formulas.
    #[arg(long, default_value_t = 4.0)]
    pub clause_density: f64,
    #[arg(long, default_value_t = 3)]
    pub clause_width: u32,
}

enum Source {
    Graph(Graph),
    Formula(CnfFormula),
    Table(Vec<f64>),
}

/// A fully specified instance: its basis and an objective over it.
pub struct Instance {
    pub kind: ProblemKind,
    pub basis: BasisSet,
    source: Source,
    description: String,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn data(path: &Path, msg: impl Into<String>) -> CliError {
    CliError::Lib(QaoaError::Format {
        path: path.to_path_buf(),
        msg: msg.into(),
    })
}

impl ProblemArgs {
    fn check_inputs(&self) -> Result<(), CliError> {
        let wanted = match self.problem {
            ProblemKind::Maxcut | ProblemKind::Dks | ProblemKind::Kvc => "--graph",
            ProblemKind::Ksat => "--cnf",
            ProblemKind::Table => "--cost-table",
        };
        let given: Vec<&str> = [
            ("--graph", self.graph.is_some()),
            ("--cnf", self.cnf.is_some()),
            ("--cost-table", self.cost_table.is_some()),
        ]
        .into_iter()
        .filter_map(|(name, set)| set.then_some(name))
        .collect();
        if self.random_instance {
            if self.problem == ProblemKind::Table {
                return Err(usage("--random-instance does not apply to --problem table"));
            }
            if !given.is_empty() {
                return Err(usage(format!("--random-instance conflicts with {}", given.join(", "))));
            }
            if self.n.is_none() {
                return Err(usage("--random-instance needs --n"));
            }
        } else if given != [wanted] {
            return Err(usage(format!("--problem {:?} takes exactly one input: {wanted}", self.problem).to_lowercase()));
        }
        if matches!(self.problem, ProblemKind::Dks | ProblemKind::Kvc) && self.k.is_none() {
            return Err(usage("this problem needs --k"));
        }
        if self.minimize && self.problem != ProblemKind::Table {
            return Err(usage("--minimize applies to --problem table only"));
        }
        Ok(())
    }

    /// Builds the instance after validating the flag combination.
    pub fn instance(&self) -> Result<Instance, CliError> {
        self.check_inputs()?;
        let mut rng = self.seed.map(ChaCha8Rng::seed_from_u64);
        let (source, description) = match self.problem {
            ProblemKind::Maxcut | ProblemKind::Dks | ProblemKind::Kvc => {
                let g = match (&self.graph, rng.as_mut()) {
                    (Some(path), _) => Graph::load(path, self.n.unwrap_or(0))?,
                    (None, Some(rng)) => {
                        if !(0.0..=1.0).contains(&self.edge_probability) {
                            return Err(usage("--edge-probability must lie in [0, 1]"));
                        }
                        Graph::erdos_renyi(self.n.unwrap(), self.edge_probability, rng)
                    }
                    (None, None) => unreachable!("checked above"),
                };
                (Source::Graph(g), self.describe(self.graph.as_deref()))
            }
            ProblemKind::Ksat => {
                let f = match (&self.cnf, rng.as_mut()) {
                    (Some(path), _) => CnfFormula::load(path)?,
                    (None, Some(rng)) => {
                        let n = self.n.unwrap();
                        let clauses = (self.clause_density * n as f64).round();
                        if clauses.is_nan() || clauses < 0.0 {
                            return Err(usage("--clause-density must be nonnegative"));
                        }
                        CnfFormula::random(n, self.clause_width, clauses as usize, rng)?
                    }
                    (None, None) => unreachable!("checked above"),
                };
                (Source::Formula(f), self.describe(self.cnf.as_deref()))
            }
            ProblemKind::Table => {
                let path = self.cost_table.as_deref().unwrap();
                (Source::Table(read_table(path)?), self.describe(Some(path)))
            }
        };
        let natural = match &source {
            Source::Graph(g) => Some(g.n_vertices()),
            Source::Formula(f) => Some(f.n_vars()),
            Source::Table(_) => None,
        };
        let n = match (self.n, natural) {
            (Some(n), Some(m)) if m > n => {
                return Err(CliError::Lib(QaoaError::Data(format!("instance has {m} variables but --n is {n}"))))
            }
            (Some(n), _) => n,
            (None, Some(m)) => m,
            (None, None) => return Err(usage("--problem table needs --n")),
        };
        let basis = match self.k {
            Some(k) => BasisSet::dicke(n, k)?,
            None => BasisSet::unconstrained(n)?,
        };
        if let Source::Table(values) = &source {
            if values.len() != basis.dim() {
                return Err(data(
                    self.cost_table.as_deref().unwrap(),
                    format!("{} values for a basis of dimension {}", values.len(), basis.dim()),
                ));
            }
        }
        Ok(Instance {
            kind: self.problem,
            basis,
            source,
            description,
        })
    }

    fn describe(&self, path: Option<&Path>) -> String {
        match (path, self.seed) {
            (Some(p), _) => p.display().to_string(),
            (None, Some(seed)) => format!("random(seed={seed})"),
            (None, None) => String::new(),
        }
    }
}

fn read_table(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(QaoaError::from)?;
    text.lines()
        .map(|l| l.split('#').next().unwrap())
        .flat_map(str::split_whitespace)
        .map(|tok| tok.parse::<f64>().map_err(|_| data(path, format!("bad value {tok:?}"))))
        .collect()
}

impl Instance {
    pub fn orientation(&self, minimize: bool) -> Orientation {
        if minimize {
            Orientation::Minimize
        } else {
            Orientation::Maximize
        }
    }

    /// Objective value of state `x`.
    pub fn objective(&self) -> impl Fn(u64) -> f64 + Sync + '_ {
        move |x| match &self.source {
            Source::Graph(g) => match self.kind {
                ProblemKind::Dks => g.induced_edges(x),
                ProblemKind::Kvc => g.covered_edges(x),
                _ => g.cut_size(x),
            },
            Source::Formula(f) => f.satisfied(x),
            Source::Table(v) => v[self.basis.index_of(x).expect("state outside basis")],
        }
    }

    pub fn cost_table(&self, orientation: Orientation) -> Result<CostTable, CliError> {
        match &self.source {
            Source::Table(v) => Ok(CostTable::from_values(self.basis.clone(), v.clone(), orientation)?),
            _ => Ok(build_cost_table(self.objective(), &self.basis, orientation)?),
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "kind": format!("{:?}", self.kind).to_lowercase(),
            "n": self.basis.n(),
            "k": self.basis.weight(),
            "source": self.description,
        })
    }
}

/// `x`, `x:<orders>`, `clique`, `ring`, `grover` or `custom:<path>`.
#[derive(Debug, Clone, PartialEq)]
pub enum MixerSpec {
    X(Vec<u32>),
    Clique,
    Ring,
    Grover,
    Custom(PathBuf),
}

pub fn parse_mixer(s: &str) -> Result<MixerSpec, String> {
    let (head, arg) = match s.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (s, None),
    };
    match (head, arg) {
        ("x", None) => Ok(MixerSpec::X(vec![1])),
        ("x", Some(orders)) => orders
            .split(',')
            .map(|o| o.trim().parse::<u32>().map_err(|_| format!("bad term order {o:?}")))
            .collect::<Result<Vec<_>, _>>()
            .map(MixerSpec::X),
        ("clique", None) => Ok(MixerSpec::Clique),
        ("ring", None) => Ok(MixerSpec::Ring),
        ("grover", None) => Ok(MixerSpec::Grover),
        ("custom", Some(path)) if !path.is_empty() => Ok(MixerSpec::Custom(PathBuf::from(path))),
        _ => Err(format!("unknown mixer {s:?}; expected x[:orders], clique, ring, grover or custom:<path>")),
    }
}

impl MixerSpec {
    pub fn label(&self) -> String {
        match self {
            MixerSpec::X(orders) => {
                format!("x:{}", orders.iter().map(u32::to_string).collect::<Vec<_>>().join(","))
            }
            MixerSpec::Clique => "clique".into(),
            MixerSpec::Ring => "ring".into(),
            MixerSpec::Grover => "grover".into(),
            MixerSpec::Custom(p) => format!("custom:{}", p.display()),
        }
    }

    pub fn build(&self, basis: &BasisSet, cache: Option<&Path>) -> Result<Mixer, CliError> {
        let n = basis.n();
        let needs_k = |name: &str| match basis.weight() {
            Some(k) => Ok(k),
            None => Err(usage(format!("--mixer {name} needs --k"))),
        };
        let build = || -> Result<Mixer, CliError> {
            Ok(match self {
                MixerSpec::X(orders) => {
                    if !basis.is_unconstrained() {
                        return Err(usage("the x mixer does not preserve Hamming weight; drop --k"));
                    }
                    mixer_x(orders, n)?
                }
                MixerSpec::Clique => mixer_clique(n, needs_k("clique")?)?,
                MixerSpec::Ring => mixer_ring(n, needs_k("ring")?)?,
                MixerSpec::Grover => mixer_grover(basis),
                MixerSpec::Custom(path) => mixer_custom(&read_complex_matrix(path, basis.dim())?, basis)?,
            })
        };
        match (self, cache) {
            (_, None) => build(),
            (MixerSpec::Clique | MixerSpec::Ring | MixerSpec::Custom(_), Some(path)) => {
                let mut failure = None;
                let m = cached_mixer(path, basis, || {
                    build().map_err(|e| {
                        let msg = e.to_string();
                        failure = Some(e);
                        QaoaError::Domain(msg)
                    })
                });
                match (m, failure) {
                    (_, Some(e)) => Err(e),
                    (m, None) => Ok(m?),
                }
            }
            (_, Some(_)) => Err(usage("--mixer-cache applies to clique, ring and custom mixers")),
        }
    }
}

fn complex_entry(v: &Value) -> Option<Complex64> {
    match v {
        Value::Number(x) => x.as_f64().map(|re| Complex64::new(re, 0.0)),
        Value::Array(pair) if pair.len() == 2 => Some(Complex64::new(pair[0].as_f64()?, pair[1].as_f64()?)),
        _ => None,
    }
}

/// JSON array of complex entries: numbers or `[re, im]` pairs.
pub fn read_complex_vector(path: &Path, len: usize) -> Result<Vec<Complex64>, CliError> {
    let v = read_json(path)?;
    let items = v.as_array().ok_or_else(|| data(path, "expected a JSON array"))?;
    if items.len() != len {
        return Err(data(path, format!("expected {len} entries, found {}", items.len())));
    }
    items
        .iter()
        .map(|x| complex_entry(x).ok_or_else(|| data(path, format!("bad complex entry {x}"))))
        .collect()
}

/// JSON array of `dim` rows, each a complex vector; flattened row-major.
pub fn read_complex_matrix(path: &Path, dim: usize) -> Result<Vec<Complex64>, CliError> {
    let v = read_json(path)?;
    let rows = v.as_array().ok_or_else(|| data(path, "expected a JSON array of rows"))?;
    if rows.len() != dim {
        return Err(data(path, format!("expected {dim} rows, found {}", rows.len())));
    }
    let mut out = Vec::with_capacity(dim * dim);
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_array().filter(|r| r.len() == dim).ok_or_else(|| data(path, format!("row {i} must have {dim} entries")))?;
        for x in row {
            out.push(complex_entry(x).ok_or_else(|| data(path, format!("bad complex entry {x} in row {i}")))?);
        }
    }
    Ok(out)
}

pub fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(QaoaError::from)?;
    serde_json::from_str(&text).map_err(|e| data(path, e.to_string()))
}

/// Angles as `{"betas": [...], "gammas": [...]}`, at the top level or under `"angles"`.
pub fn read_angles(path: &Path) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let v = read_json(path)?;
    let obj = v.get("angles").unwrap_or(&v);
    let list = |key: &str| -> Result<Vec<f64>, CliError> {
        obj.get(key)
            .and_then(Value::as_array)
            .and_then(|a| a.iter().map(Value::as_f64).collect::<Option<Vec<f64>>>())
            .ok_or_else(|| data(path, format!("missing numeric array {key:?}")))
    };
    Ok((list("betas")?, list("gammas")?))
}
