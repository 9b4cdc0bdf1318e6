//! Chain-of-cities network, compromise patterns and the cut predicate.
//!
//! Relay nodes are addressed `v(i, j)` with a 1-based row `i` in `1..=n` and
//! city `j` in `1..=m`. Alice links to every node of city 1 and Bob to every
//! node of city `m`; row `i` of city `j` links to row `i` of city `j + 1`, and
//! every city is a complete graph.
//!
//! Edge layers are numbered `0..=m`: layer 0 carries Alice's shares into
//! city 1, layer `j` carries shares from city `j` to city `j + 1`, and layer
//! `m` carries city `m`'s shares to Bob.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NetworkSpec {
    m: usize,
    n: usize,
    ell: usize,
}

impl NetworkSpec {
    /// Cities `m`, nodes per city `n`, share length `ell` in bits.
    pub fn new(m: usize, n: usize, ell: usize) -> Result<Self, Error> {
        if m == 0 || n == 0 || ell == 0 {
            return Err(Error::InvalidDimensions { m, n, ell });
        }
        Ok(Self { m, n, ell })
    }

    pub fn cities(&self) -> usize {
        self.m
    }

    pub fn nodes_per_city(&self) -> usize {
        self.n
    }

    pub fn share_bits(&self) -> usize {
        self.ell
    }

    /// Number of relay nodes, `m * n`.
    pub fn relay_count(&self) -> usize {
        self.m * self.n
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeAddress> + '_ {
        (1..=self.m).flat_map(move |j| (1..=self.n).map(move |i| NodeAddress { i, j }))
    }

    /// Every channel of the graph, endpoints included.
    pub fn edges(&self) -> Vec<Edge> {
        let mut edges = Vec::new();
        for i in 1..=self.n {
            edges.push(Edge::Long(
                Endpoint::Alice,
                Endpoint::Relay(NodeAddress { i, j: 1 }),
            ));
        }
        for j in 1..self.m {
            for i in 1..=self.n {
                edges.push(Edge::Long(
                    Endpoint::Relay(NodeAddress { i, j }),
                    Endpoint::Relay(NodeAddress { i, j: j + 1 }),
                ));
            }
        }
        for i in 1..=self.n {
            edges.push(Edge::Long(
                Endpoint::Relay(NodeAddress { i, j: self.m }),
                Endpoint::Bob,
            ));
        }
        for j in 1..=self.m {
            for i in 1..=self.n {
                for k in i + 1..=self.n {
                    edges.push(Edge::Intra(NodeAddress { i, j }, NodeAddress { i: k, j }));
                }
            }
        }
        edges
    }

    pub fn edge_counts(&self) -> EdgeCounts {
        EdgeCounts {
            alice_links: self.n,
            city_to_city: (self.m - 1) * self.n,
            bob_links: self.n,
            intracity: self.m * self.n * (self.n - 1) / 2,
        }
    }

    /// Row-major index of a relay node: by city, then by row.
    pub(crate) fn index(&self, node: NodeAddress) -> usize {
        (node.j - 1) * self.n + (node.i - 1)
    }

    pub fn contains(&self, node: NodeAddress) -> bool {
        (1..=self.n).contains(&node.i) && (1..=self.m).contains(&node.j)
    }
}

pub fn build_network(m: usize, n: usize, ell: usize) -> Result<NetworkSpec, Error> {
    NetworkSpec::new(m, n, ell)
}

/// A relay node `v(i, j)`: row `i`, city `j`, both 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeAddress {
    pub i: usize,
    pub j: usize,
}

impl NodeAddress {
    pub fn new(i: usize, j: usize) -> Self {
        Self { i, j }
    }
}

impl fmt::Display for NodeAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v({},{})", self.i, self.j)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Endpoint {
    Alice,
    Bob,
    Relay(NodeAddress),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Edge {
    /// A long-distance link (endpoint links included).
    Long(Endpoint, Endpoint),
    Intra(NodeAddress, NodeAddress),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeCounts {
    pub alice_links: usize,
    pub city_to_city: usize,
    pub bob_links: usize,
    pub intracity: usize,
}

impl EdgeCounts {
    pub fn long_distance(&self) -> usize {
        self.alice_links + self.city_to_city + self.bob_links
    }
}

/// Which relay nodes the adversary controls. Alice and Bob are not
/// representable here and are always honest.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CompromisePattern {
    spec: NetworkSpec,
    dishonest: Vec<bool>,
}

impl CompromisePattern {
    pub fn honest(spec: NetworkSpec) -> Self {
        Self {
            spec,
            dishonest: vec![false; spec.relay_count()],
        }
    }

    /// Flags in row-major order (city, then row).
    pub fn from_flags(spec: NetworkSpec, dishonest: Vec<bool>) -> Result<Self, Error> {
        if dishonest.len() != spec.relay_count() {
            return Err(Error::DimensionMismatch {
                expected: spec.relay_count(),
                actual: dishonest.len(),
            });
        }
        Ok(Self { spec, dishonest })
    }

    /// Pattern whose bit `(j-1)*n + (i-1)` of `mask` marks `v(i, j)` dishonest.
    pub fn from_mask(spec: NetworkSpec, mask: u64) -> Self {
        assert!(spec.relay_count() <= 64);
        let dishonest = (0..spec.relay_count())
            .map(|b| (mask >> b) & 1 == 1)
            .collect();
        Self { spec, dishonest }
    }

    pub fn spec(&self) -> NetworkSpec {
        self.spec
    }

    pub fn is_dishonest(&self, node: NodeAddress) -> bool {
        self.dishonest[self.spec.index(node)]
    }

    pub fn set_dishonest(&mut self, node: NodeAddress, value: bool) {
        let idx = self.spec.index(node);
        self.dishonest[idx] = value;
    }

    pub fn flags(&self) -> &[bool] {
        &self.dishonest
    }

    pub fn dishonest_count(&self) -> usize {
        self.dishonest.iter().filter(|&&d| d).count()
    }

    pub fn city_fully_dishonest(&self, j: usize) -> bool {
        self.city(j).iter().all(|&d| d)
    }

    fn city(&self, j: usize) -> &[bool] {
        let n = self.spec.n;
        &self.dishonest[(j - 1) * n..j * n]
    }

    pub(crate) fn check_spec(&self, spec: &NetworkSpec) -> Result<(), Error> {
        if self.spec != *spec {
            return Err(Error::DimensionMismatch {
                expected: spec.relay_count(),
                actual: self.dishonest.len(),
            });
        }
        Ok(())
    }

    /// Parses the `'0'`/`'1'` text form for a given network.
    pub fn parse(spec: NetworkSpec, text: &str) -> Result<Self, Error> {
        let flags = text
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse(format!(
                    "unexpected character {other:?} in pattern"
                ))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_flags(spec, flags)
    }
}

/// `m*n` characters, `'1'` for dishonest, row-major by city then row.
impl fmt::Display for CompromisePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &d in &self.dishonest {
            f.write_str(if d { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompromiseModel {
    /// Each node independently dishonest with probability `1 - t`.
    #[default]
    Bernoulli,
    /// Exactly `floor((1 - t) * m * n)` dishonest nodes, uniformly placed.
    FixedFraction,
}

impl FromStr for CompromiseModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "bernoulli" => Ok(Self::Bernoulli),
            "fixed-fraction" => Ok(Self::FixedFraction),
            other => Err(Error::Parse(format!("unknown compromise model {other:?}"))),
        }
    }
}

impl fmt::Display for CompromiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Bernoulli => "bernoulli",
            Self::FixedFraction => "fixed-fraction",
        })
    }
}

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<(), Error> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::ProbabilityOutOfRange {
            name,
            value,
            range: "[0, 1]",
        });
    }
    Ok(())
}

pub fn sample_pattern_bernoulli(
    spec: NetworkSpec,
    t: f64,
    seed: u64,
) -> Result<CompromisePattern, Error> {
    check_probability("t", t)?;
    let mut rng = SplitMix64::new(seed);
    let threshold = 1.0 - t;
    let dishonest = (0..spec.relay_count())
        .map(|_| rng.next_f64() < threshold)
        .collect();
    Ok(CompromisePattern { spec, dishonest })
}

pub fn sample_pattern_fixed_fraction(
    spec: NetworkSpec,
    t: f64,
    seed: u64,
) -> Result<CompromisePattern, Error> {
    check_probability("t", t)?;
    let total = spec.relay_count();
    let count = dishonest_quota(total, t);
    let mut rng = SplitMix64::new(seed);
    // Partial Fisher-Yates: the first `count` slots of the shuffle are dishonest.
    let mut order: Vec<usize> = (0..total).collect();
    for k in 0..count {
        let pick = k + rng.below((total - k) as u64) as usize;
        order.swap(k, pick);
    }
    let mut dishonest = vec![false; total];
    for &idx in &order[..count] {
        dishonest[idx] = true;
    }
    Ok(CompromisePattern { spec, dishonest })
}

/// `floor((1 - t) * total)`, computed so that exact products like
/// `0.4 * 10` are not lost to rounding.
fn dishonest_quota(total: usize, t: f64) -> usize {
    let raw = (1.0 - t) * total as f64;
    let rounded = raw.round();
    let count = if (raw - rounded).abs() < 1e-9 {
        rounded
    } else {
        raw.floor()
    };
    (count.max(0.0) as usize).min(total)
}

pub fn sample_pattern(
    spec: NetworkSpec,
    t: f64,
    seed: u64,
    model: CompromiseModel,
) -> Result<CompromisePattern, Error> {
    match model {
        CompromiseModel::Bernoulli => sample_pattern_bernoulli(spec, t, seed),
        CompromiseModel::FixedFraction => sample_pattern_fixed_fraction(spec, t, seed),
    }
}

/// True iff the adversary sees every share of some edge layer: either a
/// stage `j` where each row has `v(i,j)` or `v(i,j+1)` dishonest, or a fully
/// dishonest first or last city.
pub fn has_cut(spec: &NetworkSpec, pattern: &CompromisePattern) -> Result<bool, Error> {
    pattern.check_spec(spec)?;
    let m = spec.m;
    if pattern.city_fully_dishonest(1) || pattern.city_fully_dishonest(m) {
        return Ok(true);
    }
    Ok((1..m).any(|j| {
        pattern
            .city(j)
            .iter()
            .zip(pattern.city(j + 1))
            .all(|(&a, &b)| a || b)
    }))
}
