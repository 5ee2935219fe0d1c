//! Maximum matching size of a dynamic graph.
//!
//! The rank of the random Tutte matrix `T` (`T[u, v] = x_uv`,
//! `T[v, u] = −x_uv` per edge) is twice the matching size with high
//! probability. Vertex switches and merges are expressed through selector
//! matrices, and the rank of `I1·T·I2` is maintained by [`RankState`].
//!
//! Each representative `r` owns a class of original vertices; `I1[r, m]`
//! and `I2[m, r]` are one for every member `m`, so row `r` of `I1·T·I2` sums
//! the Tutte rows of the class. An inactive class contributes nothing.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::formula::Formula;
use crate::matrix::{identity, zeros};
use crate::oracle::Graph;
use crate::rank::{RankError, RankState};
use crate::scalar::{FieldElem, PrimeField, Ring, ScalarError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MatchingError {
    #[error("invalid vertex {0}")]
    InvalidVertex(usize),
    #[error(transparent)]
    Config(#[from] ScalarError),
    #[error("cannot parse update {0:?}")]
    Parse(String),
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error("Tutte rank {0} is odd")]
    OddRank(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum GraphUpdate {
    Insert { u: usize, v: usize },
    Remove { u: usize, v: usize },
    On { v: usize },
    Off { v: usize },
    Merge { u: usize, v: usize },
}

impl fmt::Display for GraphUpdate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            GraphUpdate::Insert { u, v } => write!(f, "ins {u} {v}"),
            GraphUpdate::Remove { u, v } => write!(f, "del {u} {v}"),
            GraphUpdate::On { v } => write!(f, "on {v}"),
            GraphUpdate::Off { v } => write!(f, "off {v}"),
            GraphUpdate::Merge { u, v } => write!(f, "merge {u} {v}"),
        }
    }
}

impl FromStr for GraphUpdate {
    type Err = MatchingError;

    /// One of `ins u v`, `del u v`, `on v`, `off v`, `merge u v`.
    fn from_str(line: &str) -> Result<Self, MatchingError> {
        let bad = || MatchingError::Parse(line.to_string());
        let words: Vec<&str> = line.split_whitespace().collect();
        let ids = words
            .get(1..)
            .unwrap_or(&[])
            .iter()
            .map(|w| w.parse::<usize>().map_err(|_| bad()))
            .collect::<Result<Vec<_>, _>>()?;
        match (words.first().copied(), ids.as_slice()) {
            (Some("ins"), &[u, v]) => Ok(GraphUpdate::Insert { u, v }),
            (Some("del"), &[u, v]) => Ok(GraphUpdate::Remove { u, v }),
            (Some("on"), &[v]) => Ok(GraphUpdate::On { v }),
            (Some("off"), &[v]) => Ok(GraphUpdate::Off { v }),
            (Some("merge"), &[u, v]) => Ok(GraphUpdate::Merge { u, v }),
            _ => Err(bad()),
        }
    }
}

/// Parses an update stream, skipping blank lines and `#` comments.
pub fn parse_updates(text: &str) -> Result<Vec<GraphUpdate>, MatchingError> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::parse)
        .collect()
}

/// Leaf ids of `I1`, `T`, `I2` in `I1*T*I2`.
const LEAF_I1: usize = 0;
const LEAF_T: usize = 1;
const LEAF_I2: usize = 2;

#[derive(Debug, Clone)]
pub struct TutteState {
    n: usize,
    field: PrimeField,
    rank: RankState,
    /// `x_uv` for `u < v`, drawn once at construction.
    x: Vec<Vec<FieldElem>>,
    edges: BTreeSet<(usize, usize)>,
    active: Vec<bool>,
    rep: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl TutteState {
    pub fn new(n: usize, p: u64, seed: u64) -> Result<Self, MatchingError> {
        assert!(n >= 1, "need at least one vertex");
        let field = PrimeField::new(p)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        let x = (0..n)
            .map(|u| {
                (0..n)
                    .map(|v| {
                        if u < v {
                            field.sample(|| rng.next_u64())
                        } else {
                            field.zero()
                        }
                    })
                    .collect()
            })
            .collect();
        let f = Formula::parse(&format!("I1:{n}x{n}; T:{n}x{n}; I2:{n}x{n}; I1*T*I2"))
            .expect("fixed formula");
        let inputs = [
            identity(&field, n),
            zeros(&field, n, n),
            identity(&field, n),
        ];
        let rank = RankState::new(&field, &f, &inputs, seed)?;
        Ok(TutteState {
            n,
            field,
            rank,
            x,
            edges: BTreeSet::new(),
            active: vec![true; n],
            rep: (0..n).collect(),
            members: (0..n).map(|v| vec![v]).collect(),
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    /// Rank of `I1·T·I2`, always even.
    pub fn tutte_rank(&self) -> usize {
        self.rank.rank()
    }

    pub fn matching_size(&self) -> Result<usize, MatchingError> {
        let r = self.rank.rank();
        if r % 2 == 1 {
            return Err(MatchingError::OddRank(r));
        }
        Ok(r / 2)
    }

    pub fn rank_state(&self) -> &RankState {
        &self.rank
    }

    pub fn is_representative(&self, v: usize) -> bool {
        v < self.n && self.rep[v] == v
    }

    pub fn is_active(&self, v: usize) -> bool {
        v < self.n && self.active[v]
    }

    /// Vertices that updates may address.
    pub fn representatives(&self) -> Vec<usize> {
        (0..self.n).filter(|&v| self.rep[v] == v).collect()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    /// The same graph in the oracle's representation.
    pub fn to_graph(&self) -> Graph {
        Graph {
            n: self.n,
            active: self.active.clone(),
            rep: self.rep.clone(),
            edges: self.edges.clone(),
        }
    }

    fn check_rep(&self, v: usize) -> Result<(), MatchingError> {
        if self.is_representative(v) {
            Ok(())
        } else {
            Err(MatchingError::InvalidVertex(v))
        }
    }

    fn check_pair(&self, u: usize, v: usize) -> Result<(), MatchingError> {
        self.check_rep(u)?;
        self.check_rep(v)?;
        if u == v {
            return Err(MatchingError::InvalidVertex(v));
        }
        Ok(())
    }

    fn set(
        &mut self,
        leaf: usize,
        i: usize,
        j: usize,
        value: FieldElem,
    ) -> Result<(), MatchingError> {
        self.rank.update(leaf, i, j, &value)?;
        Ok(())
    }

    fn set_edge(&mut self, u: usize, v: usize, present: bool) -> Result<(), MatchingError> {
        let (a, b) = (u.min(v), u.max(v));
        let (fwd, back) = if present {
            let x = self.x[a][b];
            (x, self.field.neg(&x))
        } else {
            (self.field.zero(), self.field.zero())
        };
        self.set(LEAF_T, a, b, fwd)?;
        self.set(LEAF_T, b, a, back)?;
        if present {
            self.edges.insert((a, b));
        } else {
            self.edges.remove(&(a, b));
        }
        Ok(())
    }

    /// Writes the selector entries linking representative `r` to `members`.
    fn set_class(&mut self, r: usize, members: &[usize], on: bool) -> Result<(), MatchingError> {
        let value = if on {
            self.field.one()
        } else {
            self.field.zero()
        };
        for &m in members {
            self.set(LEAF_I1, r, m, value)?;
            self.set(LEAF_I2, m, r, value)?;
        }
        Ok(())
    }

    /// Applies one update and returns the new matching size.
    pub fn apply(&mut self, update: GraphUpdate) -> Result<usize, MatchingError> {
        match update {
            GraphUpdate::Insert { u, v } => {
                self.check_pair(u, v)?;
                if !self.has_edge(u, v) {
                    self.set_edge(u, v, true)?;
                }
            }
            GraphUpdate::Remove { u, v } => {
                self.check_pair(u, v)?;
                if self.has_edge(u, v) {
                    self.set_edge(u, v, false)?;
                }
            }
            GraphUpdate::On { v } | GraphUpdate::Off { v } => {
                self.check_rep(v)?;
                let on = matches!(update, GraphUpdate::On { .. });
                if self.active[v] != on {
                    let members = self.members[v].clone();
                    self.set_class(v, &members, on)?;
                    self.active[v] = on;
                }
            }
            GraphUpdate::Merge { u, v } => {
                self.check_pair(u, v)?;
                if !self.active[u] {
                    return Err(MatchingError::InvalidVertex(u));
                }
                if !self.active[v] {
                    return Err(MatchingError::InvalidVertex(v));
                }
                let moved = std::mem::take(&mut self.members[v]);
                self.set_class(u, &moved, true)?;
                self.set_class(v, &moved, false)?;
                for &m in &moved {
                    self.rep[m] = u;
                }
                self.members[u].extend(moved);
                self.active[v] = false;
            }
        }
        self.matching_size()
    }

    /// A random valid update: mostly edge changes, some switches, few merges.
    pub fn random_update<R: Rng + ?Sized>(&self, rng: &mut R) -> GraphUpdate {
        let reps = self.representatives();
        let active: Vec<usize> = reps.iter().copied().filter(|&v| self.active[v]).collect();
        loop {
            let roll = rng.random_range(0..100);
            if roll < 70 && reps.len() >= 2 {
                let u = reps[rng.random_range(0..reps.len())];
                let v = reps[rng.random_range(0..reps.len())];
                if u == v {
                    continue;
                }
                return if rng.random_bool(0.6) {
                    GraphUpdate::Insert { u, v }
                } else {
                    GraphUpdate::Remove { u, v }
                };
            } else if roll < 95 {
                let v = reps[rng.random_range(0..reps.len())];
                return if self.active[v] {
                    GraphUpdate::Off { v }
                } else {
                    GraphUpdate::On { v }
                };
            } else if active.len() >= 2 {
                let u = active[rng.random_range(0..active.len())];
                let v = active[rng.random_range(0..active.len())];
                if u != v {
                    return GraphUpdate::Merge { u, v };
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::max_matching_bruteforce;
    use crate::scalar::MERSENNE_61;

    fn run(n: usize, ops: &str) -> TutteState {
        let mut st = TutteState::new(n, MERSENNE_61, 5).unwrap();
        for u in parse_updates(ops).unwrap() {
            st.apply(u).unwrap();
        }
        st
    }

    #[test]
    fn new_examples() {
        assert_eq!(
            TutteState::new(4, MERSENNE_61, 0).unwrap().matching_size(),
            Ok(0)
        );
        assert_eq!(
            TutteState::new(1, MERSENNE_61, 0).unwrap().matching_size(),
            Ok(0)
        );
        assert!(matches!(
            TutteState::new(3, 15, 0),
            Err(MatchingError::Config(_))
        ));
    }

    #[test]
    fn update_examples() {
        assert_eq!(run(4, "ins 0 1").matching_size(), Ok(1));
        let mut tri = run(4, "ins 0 1\nins 1 2\nins 0 2");
        assert_eq!(tri.matching_size(), Ok(1));
        assert_eq!(tri.apply(GraphUpdate::Insert { u: 2, v: 3 }), Ok(2));
        assert_eq!(run(4, "ins 0 1\noff 1").matching_size(), Ok(0));
        assert_eq!(run(4, "ins 0 1\noff 1\non 1").matching_size(), Ok(1));
    }

    #[test]
    fn size_examples() {
        assert_eq!(run(6, "ins 0 1\nins 2 3\nins 4 5").matching_size(), Ok(3));
        assert_eq!(
            run(4, "ins 0 1\nins 0 2\nins 0 3\nins 1 2\nins 1 3\nins 2 3").matching_size(),
            Ok(2)
        );
    }

    #[test]
    fn merges() {
        // Edges 0-1 and 2-3; merging 1 and 2 leaves the star 0-1-3.
        let mut st = run(5, "ins 0 1\nins 2 3");
        assert_eq!(st.apply(GraphUpdate::Merge { u: 1, v: 2 }), Ok(1));
        assert_eq!(
            st.apply(GraphUpdate::Insert { u: 2, v: 0 }),
            Err(MatchingError::InvalidVertex(2))
        );
        assert_eq!(
            st.apply(GraphUpdate::Off { v: 2 }),
            Err(MatchingError::InvalidVertex(2))
        );
        assert_eq!(st.apply(GraphUpdate::Insert { u: 0, v: 3 }), Ok(1));
        assert_eq!(st.apply(GraphUpdate::Insert { u: 3, v: 4 }), Ok(2));
        assert_eq!(st.apply(GraphUpdate::Off { v: 1 }), Ok(1));
        assert_eq!(st.apply(GraphUpdate::On { v: 1 }), Ok(2));
        assert_eq!(max_matching_bruteforce(&st.to_graph()), Ok(2));
    }

    #[test]
    fn invalid_ops() {
        let mut st = TutteState::new(3, MERSENNE_61, 0).unwrap();
        assert_eq!(
            st.apply(GraphUpdate::Insert { u: 0, v: 0 }),
            Err(MatchingError::InvalidVertex(0))
        );
        assert_eq!(
            st.apply(GraphUpdate::On { v: 3 }),
            Err(MatchingError::InvalidVertex(3))
        );
        st.apply(GraphUpdate::Off { v: 1 }).unwrap();
        assert_eq!(
            st.apply(GraphUpdate::Merge { u: 0, v: 1 }),
            Err(MatchingError::InvalidVertex(1))
        );
    }

    #[test]
    fn remove_then_insert_restores_state() {
        let mut st = run(4, "ins 0 1\nins 1 2");
        let before = st.rank_state().construction().n.clone();
        st.apply(GraphUpdate::Remove { u: 1, v: 2 }).unwrap();
        st.apply(GraphUpdate::Insert { u: 2, v: 1 }).unwrap();
        assert_eq!(st.rank_state().construction().n, before);
    }

    #[test]
    fn parse_round_trip() {
        let text = "ins 0 1\n# comment\n\ndel 1 0\non 2\noff 3\nmerge 4 5\n";
        let ups = parse_updates(text).unwrap();
        assert_eq!(ups.len(), 5);
        let printed: Vec<String> = ups.iter().map(ToString::to_string).collect();
        assert_eq!(
            printed,
            ["ins 0 1", "del 1 0", "on 2", "off 3", "merge 4 5"]
        );
        assert!(parse_updates("ins 1").is_err());
        assert!(parse_updates("swap 1 2").is_err());
        assert!(parse_updates("on x").is_err());
    }

    #[test]
    fn random_sequences_match_bruteforce() {
        for seed in 0..4u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 3 + seed as usize;
            let mut st = TutteState::new(n, MERSENNE_61, seed).unwrap();
            for _ in 0..60 {
                let up = st.random_update(&mut rng);
                let got = st.apply(up).unwrap();
                assert_eq!(
                    got,
                    max_matching_bruteforce(&st.to_graph()).unwrap(),
                    "seed {seed} after {up}"
                );
                assert_eq!(st.tutte_rank() % 2, 0);
            }
        }
    }
}
