//! Key verification between Alice and Bob.
//!
//! A relayed key is laid out as `s1a | s1b | s2 | s3`. Alice sends
//! `(r | H(s3)) ^ (s1a | s1b)` for a fresh nonce `r`; Bob unmasks with his own
//! `s1'`, accepts iff the hash matches `H(s3')`, and answers `H(r') ^ s2'`;
//! Alice unmasks with `s2` and accepts iff she sees `H(r)`. Only `s3` is kept
//! as the shared key.
//!
//! Any tampering with the relay shows up as a difference `e = s ^ s'`, so an
//! attack is fully described by a [`TamperString`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bits::ShareString;
use crate::error::Error;
use crate::rng::{mix64, SplitMix64, GOLDEN_GAMMA};

/// Bit lengths of the four key segments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KeyLayout {
    /// Nonce length.
    pub ell_1a: usize,
    /// Digest length of `H(s3)`.
    pub ell_1b: usize,
    /// Digest length of `H(r)`.
    pub ell_2: usize,
    /// Length of the retained key.
    pub ell_3: usize,
}

impl Default for KeyLayout {
    fn default() -> Self {
        Self {
            ell_1a: 64,
            ell_1b: 64,
            ell_2: 64,
            ell_3: 128,
        }
    }
}

impl KeyLayout {
    pub fn new(ell_1a: usize, ell_1b: usize, ell_2: usize, ell_3: usize) -> Result<Self, Error> {
        if ell_3 == 0 {
            return Err(Error::InvalidLayout("s3 must have at least one bit".into()));
        }
        Ok(Self {
            ell_1a,
            ell_1b,
            ell_2,
            ell_3,
        })
    }

    pub fn total(&self) -> usize {
        self.ell_1a + self.ell_1b + self.ell_2 + self.ell_3
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyPartition {
    pub s1a: ShareString,
    pub s1b: ShareString,
    pub s2: ShareString,
    pub s3: ShareString,
}

impl KeyPartition {
    pub fn layout(&self) -> KeyLayout {
        KeyLayout {
            ell_1a: self.s1a.len(),
            ell_1b: self.s1b.len(),
            ell_2: self.s2.len(),
            ell_3: self.s3.len(),
        }
    }

    pub fn s1(&self) -> ShareString {
        ShareString::concat(&[&self.s1a, &self.s1b])
    }

    pub fn to_key(&self) -> ShareString {
        ShareString::concat(&[&self.s1a, &self.s1b, &self.s2, &self.s3])
    }

    /// The partition of `s ^ e`.
    pub fn tampered(&self, e: &TamperString) -> Result<Self, Error> {
        Ok(Self {
            s1a: self.s1a.xor(&e.e1a)?,
            s1b: self.s1b.xor(&e.e1b)?,
            s2: self.s2.xor(&e.e2)?,
            s3: self.s3.xor(&e.e3)?,
        })
    }
}

pub fn split_key(
    s: &ShareString,
    ell_1a: usize,
    ell_1b: usize,
    ell_2: usize,
) -> Result<KeyPartition, Error> {
    let used = ell_1a + ell_1b + ell_2;
    if used >= s.len() {
        return Err(Error::InvalidLayout(format!(
            "segments of {used} bits leave nothing for s3 in a {}-bit key",
            s.len()
        )));
    }
    Ok(KeyPartition {
        s1a: s.slice(0, ell_1a),
        s1b: s.slice(ell_1a, ell_1b),
        s2: s.slice(ell_1a + ell_1b, ell_2),
        s3: s.slice(used, s.len() - used),
    })
}

pub fn split_with_layout(s: &ShareString, layout: KeyLayout) -> Result<KeyPartition, Error> {
    if s.len() != layout.total() {
        return Err(Error::LengthMismatch {
            left: layout.total(),
            right: s.len(),
        });
    }
    split_key(s, layout.ell_1a, layout.ell_1b, layout.ell_2)
}

/// The difference `s ^ s'` split along the key layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TamperString {
    pub e1a: ShareString,
    pub e1b: ShareString,
    pub e2: ShareString,
    pub e3: ShareString,
}

impl TamperString {
    pub fn zero(layout: KeyLayout) -> Self {
        Self {
            e1a: ShareString::zeros(layout.ell_1a),
            e1b: ShareString::zeros(layout.ell_1b),
            e2: ShareString::zeros(layout.ell_2),
            e3: ShareString::zeros(layout.ell_3),
        }
    }

    pub fn from_string(e: &ShareString, layout: KeyLayout) -> Result<Self, Error> {
        let p = split_with_layout(e, layout)?;
        Ok(Self {
            e1a: p.s1a,
            e1b: p.s1b,
            e2: p.s2,
            e3: p.s3,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.e1a.is_zero() && self.e1b.is_zero() && self.e2.is_zero() && self.e3.is_zero()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum HashFamily {
    /// Mix-function sponge; nonlinear over GF(2).
    DefaultNonlinear,
    /// A seeded GF(2)-linear map, `H(a ^ b) = H(a) ^ H(b)`.
    LinearTest { seed: u64 },
}

impl fmt::Display for HashFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DefaultNonlinear => f.write_str("default"),
            Self::LinearTest { seed } => write!(f, "linear:{seed}"),
        }
    }
}

impl FromStr for HashFamily {
    type Err = Error;

    /// `default`, `linear` (seed 0) or `linear:<seed>`.
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "default" => Ok(Self::DefaultNonlinear),
            "linear" => Ok(Self::LinearTest { seed: 0 }),
            _ => match s.strip_prefix("linear:") {
                Some(seed) => seed
                    .parse()
                    .map(|seed| Self::LinearTest { seed })
                    .map_err(|e| Error::Parse(format!("bad linear hash seed {seed:?}: {e}"))),
                None => Err(Error::Parse(format!("unknown hash family {s:?}"))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HashSpec {
    pub family: HashFamily,
    pub output_bits: usize,
}

impl HashSpec {
    pub fn new(family: HashFamily, output_bits: usize) -> Self {
        Self {
            family,
            output_bits,
        }
    }
}

pub fn hash(spec: &HashSpec, msg: &ShareString) -> ShareString {
    match spec.family {
        HashFamily::DefaultNonlinear => sponge_hash(msg, spec.output_bits),
        HashFamily::LinearTest { seed } => linear_hash(msg, spec.output_bits, seed),
    }
}

fn sponge_hash(msg: &ShareString, d: usize) -> ShareString {
    let len = msg.len();
    let mut words = msg.words().to_vec();
    if len.is_multiple_of(64) {
        words.push(1);
    } else {
        words[len / 64] |= 1 << (len % 64);
    }
    let mut u = mix64(GOLDEN_GAMMA ^ len as u64);
    for w in words {
        u = mix64(u ^ w);
    }
    let out = (0..d.div_ceil(64) as u64)
        .map(|k| mix64(u.wrapping_add((k + 1).wrapping_mul(GOLDEN_GAMMA))))
        .collect();
    ShareString::from_words(out, d)
}

fn linear_hash(msg: &ShareString, d: usize, seed: u64) -> ShareString {
    let words = msg.words();
    ShareString::from_bits((0..d as u64).map(|r| {
        let acc = words.iter().enumerate().fold(0u64, |acc, (c, &w)| {
            let row = mix64(
                seed.wrapping_add(0x1_0000_0001u64.wrapping_mul(r))
                    .wrapping_add(c as u64),
            );
            acc ^ (row & w)
        });
        acc.count_ones() % 2 == 1
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct VerificationOutcome {
    pub bob_accepts: bool,
    pub alice_accepts: bool,
}

/// Outcome plus the two wire messages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerificationTrace {
    pub outcome: VerificationOutcome,
    /// `(r | H(s3)) ^ s1`.
    pub to_bob: ShareString,
    /// `H(r') ^ s2'`; absent when Bob aborts.
    pub to_alice: Option<ShareString>,
    pub nonce: ShareString,
}

pub fn run_verification(
    alice: &KeyPartition,
    bob: &KeyPartition,
    family: HashFamily,
    seed: u64,
) -> Result<VerificationOutcome, Error> {
    trace_verification(alice, bob, family, seed).map(|t| t.outcome)
}

/// Runs the exchange; the nonce is the first `ell_1a` bits of the stream
/// seeded with `seed`. Digests of `s3` use `ell_1b` bits, digests of the
/// nonce `ell_2` bits.
pub fn trace_verification(
    alice: &KeyPartition,
    bob: &KeyPartition,
    family: HashFamily,
    seed: u64,
) -> Result<VerificationTrace, Error> {
    let layout = alice.layout();
    if bob.layout() != layout {
        return Err(Error::InvalidLayout(format!(
            "Alice uses {layout:?} but Bob uses {:?}",
            bob.layout()
        )));
    }
    let key_hash = HashSpec::new(family, layout.ell_1b);
    let nonce_hash = HashSpec::new(family, layout.ell_2);

    // Alice
    let nonce = SplitMix64::new(seed).next_string(layout.ell_1a);
    let to_bob = ShareString::concat(&[&nonce, &hash(&key_hash, &alice.s3)]).xor(&alice.s1())?;

    // Bob
    let opened = to_bob.xor(&bob.s1())?;
    let bob_nonce = opened.slice(0, layout.ell_1a);
    let claimed = opened.slice(layout.ell_1a, layout.ell_1b);
    let bob_accepts = claimed == hash(&key_hash, &bob.s3);
    let to_alice = if bob_accepts {
        Some(hash(&nonce_hash, &bob_nonce).xor(&bob.s2)?)
    } else {
        None
    };

    // Alice
    let alice_accepts = match &to_alice {
        Some(reply) => reply.xor(&alice.s2)? == hash(&nonce_hash, &nonce),
        None => false,
    };

    Ok(VerificationTrace {
        outcome: VerificationOutcome {
            bob_accepts,
            alice_accepts,
        },
        to_bob,
        to_alice,
        nonce,
    })
}

/// The `e1b` that makes Bob accept a key whose `s3` was shifted by `e3`,
/// computed with knowledge of Alice's `s3`.
pub fn attack_forge_bob(
    alice_s3: &ShareString,
    e3: &ShareString,
    spec: &HashSpec,
) -> Result<ShareString, Error> {
    let shifted = alice_s3.xor(e3)?;
    hash(spec, alice_s3).xor(&hash(spec, &shifted))
}

/// Whether a reply `guess` injected in Bob's place would pass Alice's check,
/// given `nonce_hash = H(r)`.
pub fn attack_impersonate_bob(
    guess: &ShareString,
    alice: &KeyPartition,
    nonce_hash: &ShareString,
) -> Result<bool, Error> {
    Ok(*guess == alice.s2.xor(nonce_hash)?)
}

/// Adversary strategies for verification campaigns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Attack {
    /// No tampering.
    None,
    /// Fixed nonzero `e3` with a uniformly guessed `e1b`.
    RandomE1b { e3: ShareString },
    /// Fresh nonzero `e3` with `e1b = H(e3)`, the forgery that works against
    /// any GF(2)-linear hash without knowing `s3`.
    LinearForge,
    /// Bob is cut off and a random reply is sent to Alice in his place.
    Impersonate,
}

impl Attack {
    pub fn name(&self) -> &'static str {
        match self {
            Self::None => "none",
            Self::RandomE1b { .. } => "random-e1b",
            Self::LinearForge => "linear-forge",
            Self::Impersonate => "impersonate",
        }
    }
}

fn nonzero_string(rng: &mut SplitMix64, len: usize) -> ShareString {
    loop {
        let s = rng.next_string(len);
        if !s.is_zero() {
            return s;
        }
    }
}

/// Fixed nonzero `e3` for [`Attack::RandomE1b`] campaigns seeded with `seed`.
pub fn campaign_e3(layout: KeyLayout, seed: u64) -> ShareString {
    nonzero_string(&mut SplitMix64::new(mix64(seed ^ 0xe3)), layout.ell_3)
}

/// One verification trial against a uniformly random key.
///
/// Draw order from the stream seeded by `seed`: the key, then any attack
/// strings, then the nonce seed.
pub fn attack_trial(
    layout: KeyLayout,
    family: HashFamily,
    attack: &Attack,
    seed: u64,
) -> Result<VerificationOutcome, Error> {
    let mut rng = SplitMix64::new(seed);
    let alice = split_with_layout(&rng.next_string(layout.total()), layout)?;
    let mut e = TamperString::zero(layout);
    match attack {
        Attack::None => {}
        Attack::RandomE1b { e3 } => {
            e.e3 = e3.clone();
            e.e1b = rng.next_string(layout.ell_1b);
        }
        Attack::LinearForge => {
            e.e3 = nonzero_string(&mut rng, layout.ell_3);
            e.e1b = hash(&HashSpec::new(family, layout.ell_1b), &e.e3);
        }
        Attack::Impersonate => {
            let guess = rng.next_string(layout.ell_2);
            let nonce = SplitMix64::new(rng.next_u64()).next_string(layout.ell_1a);
            let nonce_hash = hash(&HashSpec::new(family, layout.ell_2), &nonce);
            let alice_accepts = attack_impersonate_bob(&guess, &alice, &nonce_hash)?;
            return Ok(VerificationOutcome {
                bob_accepts: false,
                alice_accepts,
            });
        }
    }
    let bob = alice.tampered(&e)?;
    run_verification(&alice, &bob, family, rng.next_u64())
}
