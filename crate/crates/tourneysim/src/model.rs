//! Team identity, win-probability models, and the reproducible randomness
//! contract shared by every other module.

use std::fmt;
use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Effort of team `i` is `EFFORT_OFFSET - i`. Fixed, not configurable.
pub const EFFORT_OFFSET: u32 = 57;

/// Absolute tolerance for probability equality checks.
pub const PROB_TOLERANCE: f64 = 1e-12;

/// Complementarity violations above this abort matrix loading.
pub const MATRIX_TOLERANCE: f64 = 1e-9;

/// Identifier string for the generator backing [`RngStream`], recorded in
/// output metadata so results can be tied to an exact algorithm.
pub const RNG_ALGORITHM: &str = "chacha8(seed_from_u64(master_seed), stream=replay_index)";

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("a team cannot play itself (rank {0})")]
    SelfPlay(Rank),
    #[error("rank {rank} out of range for a {n}-team model")]
    RankOutOfRange { rank: u32, n: usize },
    #[error("rank {0} yields non-positive effort")]
    NonPositiveEffort(u32),
    #[error("discriminatory power must be non-negative, got {0}")]
    NegativePower(f64),
    #[error("rank values must be at least 1")]
    ZeroRank,
    #[error("invalid matrix: {0}")]
    BadMatrix(String),
}

/// A team's 1-based pre-tournament rank. Lower means stronger; it is the
/// sole notion of strength in the whole simulator.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rank(u8);

impl Rank {
    pub fn new(value: u32) -> Result<Self, ModelError> {
        if value == 0 {
            return Err(ModelError::ZeroRank);
        }
        if value >= EFFORT_OFFSET {
            return Err(ModelError::NonPositiveEffort(value));
        }
        Ok(Rank(value as u8))
    }

    /// The 1-based rank value.
    #[inline]
    pub fn value(self) -> u32 {
        self.0 as u32
    }

    /// Zero-based index for per-team arrays.
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    /// Ranks `1..=n`, strongest first.
    pub fn all(n: usize) -> impl Iterator<Item = Rank> {
        (1..=n as u32).map(|v| Rank(v as u8))
    }
}

impl fmt::Debug for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Rank({})", self.0)
    }
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Tullock contest model: `p(i,j) = (57-i)^r / ((57-i)^r + (57-j)^r)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TullockModel {
    r: f64,
}

impl TullockModel {
    pub fn new(r: f64) -> Result<Self, ModelError> {
        if !(r >= 0.0) {
            return Err(ModelError::NegativePower(r));
        }
        Ok(TullockModel { r })
    }

    pub fn discriminatory_power(&self) -> f64 {
        self.r
    }
}

/// Probability that team `i` beats team `j` under the Tullock model.
pub fn tullock_win_probability(i: Rank, j: Rank, model: &TullockModel) -> Result<f64, ModelError> {
    if i == j {
        return Err(ModelError::SelfPlay(i));
    }
    let ei = (EFFORT_OFFSET - i.value()) as f64;
    let ej = (EFFORT_OFFSET - j.value()) as f64;
    let fi = ei.powf(model.r);
    let fj = ej.powf(model.r);
    Ok(fi / (fi + fj))
}

/// Explicit win-probability grid; `p[i][j]` is the probability that team `i`
/// beats team `j`. The diagonal is unused.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixModel {
    n: usize,
    p: Vec<f64>,
}

impl MatrixModel {
    pub fn from_grid(n: usize, p: Vec<f64>) -> Result<Self, ModelError> {
        if n < 2 {
            return Err(ModelError::BadMatrix(format!("need at least 2 teams, got {n}")));
        }
        if p.len() != n * n {
            return Err(ModelError::BadMatrix(format!(
                "expected {} entries, got {}",
                n * n,
                p.len()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let pij = p[i * n + j];
                if !(0.0..=1.0).contains(&pij) {
                    return Err(ModelError::BadMatrix(format!(
                        "p[{}][{}] = {pij} outside [0,1]",
                        i + 1,
                        j + 1
                    )));
                }
                let pji = p[j * n + i];
                if (pij + pji - 1.0).abs() > MATRIX_TOLERANCE {
                    return Err(ModelError::BadMatrix(format!(
                        "p[{}][{}] + p[{}][{}] = {} violates complementarity",
                        i + 1,
                        j + 1,
                        j + 1,
                        i + 1,
                        pij + pji
                    )));
                }
            }
        }
        Ok(MatrixModel { n, p })
    }

    /// Equally strong teams: `p = 0.5` everywhere.
    pub fn uniform(n: usize) -> Self {
        MatrixModel {
            n,
            p: vec![0.5; n * n],
        }
    }

    /// Fully deterministic: the lower rank always wins (`p = 1` if `i < j`).
    pub fn dominance(n: usize) -> Self {
        let mut p = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i < j {
                    p[i * n + j] = 1.0;
                }
            }
        }
        MatrixModel { n, p }
    }

    /// Plain-text format: first line `n`, then `n` rows of `n` space-separated
    /// reals. Diagonal entries are ignored.
    pub fn from_text(text: &str) -> Result<Self, ModelError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let n: usize = lines
            .next()
            .ok_or_else(|| ModelError::BadMatrix("empty file".into()))?
            .trim()
            .parse()
            .map_err(|e| ModelError::BadMatrix(format!("bad team count: {e}")))?;
        let mut p = Vec::with_capacity(n * n);
        for i in 0..n {
            let line = lines
                .next()
                .ok_or_else(|| ModelError::BadMatrix(format!("missing row {}", i + 1)))?;
            let row: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse).collect();
            let row = row.map_err(|e| ModelError::BadMatrix(format!("row {}: {e}", i + 1)))?;
            if row.len() != n {
                return Err(ModelError::BadMatrix(format!(
                    "row {} has {} entries, expected {n}",
                    i + 1,
                    row.len()
                )));
            }
            p.extend(row);
        }
        // zero the diagonal so ignored entries cannot fail validation
        for i in 0..n {
            p[i * n + i] = 0.0;
        }
        MatrixModel::from_grid(n, p)
    }

    pub fn from_file(path: &Path) -> Result<Self, std::io::Error> {
        let text = std::fs::read_to_string(path)?;
        MatrixModel::from_text(&text)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string()))
    }

    pub fn team_count(&self) -> usize {
        self.n
    }
}

/// Probability that team `i` beats team `j` under an explicit matrix.
pub fn matrix_win_probability(i: Rank, j: Rank, model: &MatrixModel) -> Result<f64, ModelError> {
    if i == j {
        return Err(ModelError::SelfPlay(i));
    }
    for r in [i, j] {
        if r.index() >= model.n {
            return Err(ModelError::RankOutOfRange {
                rank: r.value(),
                n: model.n,
            });
        }
    }
    Ok(model.p[i.index() * model.n + j.index()])
}

#[derive(Clone, Debug, PartialEq)]
pub enum WinModel {
    Tullock(TullockModel),
    Matrix(MatrixModel),
}

impl WinModel {
    pub fn win_probability(&self, i: Rank, j: Rank) -> Result<f64, ModelError> {
        match self {
            WinModel::Tullock(m) => tullock_win_probability(i, j, m),
            WinModel::Matrix(m) => matrix_win_probability(i, j, m),
        }
    }
}

/// Dense `n x n` win-probability table precomputed from a [`WinModel`].
///
/// Replays sample hundreds of matches each, so the hot path must not pay for
/// `powf` per match.
#[derive(Clone, Debug)]
pub struct ProbTable {
    n: usize,
    p: Vec<f64>,
}

impl ProbTable {
    pub fn new(model: &WinModel, n: usize) -> Result<Self, ModelError> {
        if let WinModel::Matrix(m) = model {
            if m.team_count() != n {
                return Err(ModelError::BadMatrix(format!(
                    "matrix is for {} teams, format needs {n}",
                    m.team_count()
                )));
            }
        }
        let mut p = vec![0.0; n * n];
        for i in Rank::all(n) {
            for j in Rank::all(n) {
                if i != j {
                    p[i.index() * n + j.index()] = model.win_probability(i, j)?;
                }
            }
        }
        Ok(ProbTable { n, p })
    }

    pub fn team_count(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn prob(&self, i: Rank, j: Rank) -> f64 {
        debug_assert!(i != j && i.index() < self.n && j.index() < self.n);
        self.p[i.index() * self.n + j.index()]
    }
}

/// Samples the winner of a single match, consuming exactly one uniform variate.
#[inline]
pub fn sample_winner(i: Rank, j: Rank, probs: &ProbTable, rng: &mut RngStream) -> Rank {
    if rng.uniform() < probs.prob(i, j) {
        i
    } else {
        j
    }
}

/// Winner of one match between `i` and `j`; validated variant of
/// [`sample_winner`] that works on an un-tabulated model.
pub fn sample_match_winner(
    i: Rank,
    j: Rank,
    model: &WinModel,
    rng: &mut RngStream,
) -> Result<Rank, ModelError> {
    let p = model.win_probability(i, j)?;
    Ok(if rng.uniform() < p { i } else { j })
}

/// One replay's private random stream.
///
/// The variate sequence is a pure function of `(master_seed, stream_index)`;
/// distinct stream indices give independent ChaCha streams, so replays can be
/// scheduled on any number of threads without changing any result.
pub struct RngStream {
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(master_seed);
        inner.set_stream(stream_index);
        RngStream { inner }
    }

    /// Uniform draw from `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    /// Uniform integer from `0..n`.
    #[inline]
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for k in (1..items.len()).rev() {
            items.swap(k, self.below(k + 1));
        }
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}
