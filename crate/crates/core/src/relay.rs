//! The relay protocol as explicit message passing.
//!
//! Alice splits a fresh key into `n` XOR shares and hands share `i` to
//! `v(i, 1)`. In every city each node sends a fresh random string to every
//! other node of its city and folds both the strings it sent and the strings it
//! received into its share before forwarding it along its row. Every string is
//! added into the city's XOR-sum exactly twice, so the XOR of the `n` shares
//! is the same on every edge layer and Bob recovers Alice's key.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::bits::ShareString;
use crate::error::Error;
use crate::rng::{SplitMix64, StringSource};
use crate::topology::{CompromisePattern, NetworkSpec, NodeAddress};

/// Identifies the share travelling on row `row` of edge layer `layer`
/// (sender `v(row, layer)` or Alice, receiver `v(row, layer + 1)` or Bob).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeKey {
    pub layer: usize,
    pub row: usize,
}

/// Identifies `q(from -> to)` exchanged inside `city`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntraKey {
    pub city: usize,
    pub from: usize,
    pub to: usize,
}

/// XOR masks applied to intercity shares in transit.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TamperPlan {
    masks: BTreeMap<EdgeKey, ShareString>,
}

impl TamperPlan {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `mask` to the share on (`row`, `layer`); masks on the same edge combine by XOR.
    pub fn with_mask(mut self, row: usize, layer: usize, mask: ShareString) -> Self {
        let key = EdgeKey { layer, row };
        match self.masks.get_mut(&key) {
            Some(existing) => existing.xor_assign(&mask),
            None => {
                self.masks.insert(key, mask);
            }
        }
        self
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn masks(&self) -> impl Iterator<Item = (&EdgeKey, &ShareString)> {
        self.masks.iter()
    }

    pub fn mask(&self, key: EdgeKey) -> Option<&ShareString> {
        self.masks.get(&key)
    }

    fn validate(&self, spec: &NetworkSpec) -> Result<(), Error> {
        for (key, mask) in &self.masks {
            if key.layer > spec.cities() || !(1..=spec.nodes_per_city()).contains(&key.row) {
                return Err(Error::NoSuchEdge {
                    row: key.row,
                    layer: key.layer,
                });
            }
            if mask.len() != spec.share_bits() {
                return Err(Error::LengthMismatch {
                    left: spec.share_bits(),
                    right: mask.len(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Bandwidth {
    pub intercity_bits: u64,
    pub intracity_bits: u64,
}

/// Every string sent during one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    spec: NetworkSpec,
    /// `edge[layer][row - 1]`, as sent.
    edge: Vec<Vec<ShareString>>,
    /// `intra[city - 1][(from - 1) * n + (to - 1)]`; the diagonal is unused.
    intra: Vec<Vec<Option<ShareString>>>,
    tamper: TamperPlan,
    bandwidth: Bandwidth,
}

impl Transcript {
    pub fn spec(&self) -> NetworkSpec {
        self.spec
    }

    /// The share `r(row, layer)` as its sender emitted it.
    pub fn edge_string(&self, row: usize, layer: usize) -> &ShareString {
        &self.edge[layer][row - 1]
    }

    /// The share as delivered, after any tampering in transit.
    pub fn delivered(&self, row: usize, layer: usize) -> ShareString {
        let sent = self.edge_string(row, layer);
        match self.tamper.mask(EdgeKey { layer, row }) {
            Some(mask) => sent.xor(mask).expect("tamper masks are validated"),
            None => sent.clone(),
        }
    }

    pub fn intra_string(&self, city: usize, from: usize, to: usize) -> &ShareString {
        let n = self.spec.nodes_per_city();
        self.intra[city - 1][(from - 1) * n + (to - 1)]
            .as_ref()
            .expect("no string from a node to itself")
    }

    pub fn edge_strings(&self) -> impl Iterator<Item = (EdgeKey, &ShareString)> {
        self.edge.iter().enumerate().flat_map(|(layer, row)| {
            row.iter()
                .enumerate()
                .map(move |(r, s)| (EdgeKey { layer, row: r + 1 }, s))
        })
    }

    pub fn intra_strings(&self) -> impl Iterator<Item = (IntraKey, &ShareString)> {
        let n = self.spec.nodes_per_city();
        self.intra.iter().enumerate().flat_map(move |(c, slots)| {
            slots.iter().enumerate().filter_map(move |(idx, s)| {
                s.as_ref().map(|s| {
                    (
                        IntraKey {
                            city: c + 1,
                            from: idx / n + 1,
                            to: idx % n + 1,
                        },
                        s,
                    )
                })
            })
        })
    }

    pub fn tamper(&self) -> &TamperPlan {
        &self.tamper
    }

    pub fn bandwidth(&self) -> Bandwidth {
        self.bandwidth
    }

    /// XOR of the `n` shares sent on `layer`.
    pub fn layer_sum(&self, layer: usize) -> ShareString {
        fold_xor(self.edge[layer].iter(), self.spec.share_bits())
    }

    /// Re-derives every forwarded share from its inputs; true iff each one
    /// equals `received ^ (sent q's) ^ (received q's)`.
    pub fn recombination_holds(&self) -> bool {
        let n = self.spec.nodes_per_city();
        (1..=self.spec.cities()).all(|j| {
            (1..=n).all(|i| {
                let mut expect = self.delivered(i, j - 1);
                for k in (1..=n).filter(|&k| k != i) {
                    expect.xor_assign(self.intra_string(j, i, k));
                    expect.xor_assign(self.intra_string(j, k, i));
                }
                &expect == self.edge_string(i, j)
            })
        })
    }

    /// Line-oriented dump, one string per line:
    /// `edge <layer> <row> <hex>` then `intra <city> <from> <to> <hex>`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let spec = self.spec;
        writeln!(
            out,
            "# m={} n={} ell={}",
            spec.cities(),
            spec.nodes_per_city(),
            spec.share_bits()
        )
        .unwrap();
        for (key, s) in self.edge_strings() {
            writeln!(out, "edge {} {} {}", key.layer, key.row, s.to_hex()).unwrap();
        }
        for (key, s) in self.intra_strings() {
            writeln!(
                out,
                "intra {} {} {} {}",
                key.city,
                key.from,
                key.to,
                s.to_hex()
            )
            .unwrap();
        }
        for (key, mask) in self.tamper.masks() {
            writeln!(out, "tamper {} {} {}", key.layer, key.row, mask.to_hex()).unwrap();
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    /// Alice's key.
    pub s: ShareString,
    /// Bob's key.
    pub s_prime: ShareString,
    pub transcript: Transcript,
}

impl RunOutcome {
    pub fn keys_equal(&self) -> bool {
        self.s == self.s_prime
    }
}

fn fold_xor<'a>(strings: impl Iterator<Item = &'a ShareString>, len: usize) -> ShareString {
    strings.fold(ShareString::zeros(len), |mut acc, s| {
        acc.xor_assign(s);
        acc
    })
}

/// Runs the protocol with randomness from the seeded stream.
pub fn run_relay(
    spec: &NetworkSpec,
    pattern: &CompromisePattern,
    seed: u64,
    tamper: Option<&TamperPlan>,
) -> Result<RunOutcome, Error> {
    pattern.check_spec(spec)?;
    run_relay_with(spec, &mut SplitMix64::new(seed), tamper)
}

/// Runs the protocol drawing randomness from `source`: Alice's `n` shares
/// first, then each city's strings in `(city, from, to)` order.
pub fn run_relay_with<S: StringSource + ?Sized>(
    spec: &NetworkSpec,
    source: &mut S,
    tamper: Option<&TamperPlan>,
) -> Result<RunOutcome, Error> {
    let empty = TamperPlan::new();
    let tamper = tamper.unwrap_or(&empty);
    tamper.validate(spec)?;

    let (m, n, ell) = (spec.cities(), spec.nodes_per_city(), spec.share_bits());
    let mut edge: Vec<Vec<ShareString>> = Vec::with_capacity(m + 1);
    edge.push((0..n).map(|_| source.next_string(ell)).collect());
    let mut intra = Vec::with_capacity(m);

    for j in 1..=m {
        let received: Vec<ShareString> = (1..=n)
            .map(|i| {
                match tamper.mask(EdgeKey {
                    layer: j - 1,
                    row: i,
                }) {
                    Some(mask) => edge[j - 1][i - 1].xor(mask).expect("validated"),
                    None => edge[j - 1][i - 1].clone(),
                }
            })
            .collect();

        let mut q: Vec<Option<ShareString>> = vec![None; n * n];
        for from in 0..n {
            for to in (0..n).filter(|&to| to != from) {
                q[from * n + to] = Some(source.next_string(ell));
            }
        }

        let forwarded = received
            .into_iter()
            .enumerate()
            .map(|(i, mut share)| {
                for k in (0..n).filter(|&k| k != i) {
                    share.xor_assign(q[i * n + k].as_ref().unwrap());
                    share.xor_assign(q[k * n + i].as_ref().unwrap());
                }
                share
            })
            .collect();
        edge.push(forwarded);
        intra.push(q);
    }

    let s = fold_xor(edge[0].iter(), ell);
    let s_prime = fold_xor(
        (1..=n)
            .map(|i| match tamper.mask(EdgeKey { layer: m, row: i }) {
                Some(mask) => edge[m][i - 1].xor(mask).expect("validated"),
                None => edge[m][i - 1].clone(),
            })
            .collect::<Vec<_>>()
            .iter(),
        ell,
    );

    let bandwidth = Bandwidth {
        intercity_bits: (n * (m + 1) * ell) as u64,
        intracity_bits: intra
            .iter()
            .flatten()
            .flatten()
            .map(|s: &ShareString| s.len() as u64)
            .sum(),
    };
    let transcript = Transcript {
        spec: *spec,
        edge,
        intra,
        tamper: tamper.clone(),
        bandwidth,
    };
    Ok(RunOutcome {
        s,
        s_prime,
        transcript,
    })
}

/// What the adversary learns from the nodes it controls.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AdversaryView {
    pub known_edge_strings: BTreeMap<EdgeKey, ShareString>,
    pub known_intra_strings: BTreeMap<IntraKey, ShareString>,
    pub pattern: CompromisePattern,
}

impl AdversaryView {
    pub fn is_empty(&self) -> bool {
        self.known_edge_strings.is_empty() && self.known_intra_strings.is_empty()
    }
}

pub fn extract_view(
    outcome: &RunOutcome,
    pattern: &CompromisePattern,
) -> Result<AdversaryView, Error> {
    let transcript = &outcome.transcript;
    let spec = transcript.spec();
    pattern.check_spec(&spec)?;
    let m = spec.cities();
    let bad =
        |i: usize, j: usize| (1..=m).contains(&j) && pattern.is_dishonest(NodeAddress::new(i, j));

    let known_edge_strings = transcript
        .edge_strings()
        .filter(|(k, _)| bad(k.row, k.layer) || bad(k.row, k.layer + 1))
        .map(|(k, s)| (k, s.clone()))
        .collect();
    let known_intra_strings = transcript
        .intra_strings()
        .filter(|(k, _)| bad(k.from, k.city) || bad(k.to, k.city))
        .map(|(k, s)| (k, s.clone()))
        .collect();
    Ok(AdversaryView {
        known_edge_strings,
        known_intra_strings,
        pattern: pattern.clone(),
    })
}

/// XOR of the first edge layer the adversary sees in full, if any.
pub fn adversary_reconstruct(view: &AdversaryView, spec: &NetworkSpec) -> Option<ShareString> {
    let n = spec.nodes_per_city();
    (0..=spec.cities()).find_map(|layer| {
        let shares: Option<Vec<&ShareString>> = (1..=n)
            .map(|row| view.known_edge_strings.get(&EdgeKey { layer, row }))
            .collect();
        shares.map(|shares| fold_xor(shares.into_iter(), spec.share_bits()))
    })
}
