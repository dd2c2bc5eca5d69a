use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{
    parse_party, party_name, two_body_subspace, DensityOperator, OperatorSubspace, QuditRegister,
};

/// Which party pairs (and optionally triples) have known reduced states.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarginalPattern {
    register: QuditRegister,
    pairs: Vec<(usize, usize)>,
    triples: Vec<[usize; 3]>,
    connected: bool,
}

fn is_connected(n: usize, pairs: &[(usize, usize)]) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut Vec<usize>, x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    for &(a, b) in pairs {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        parent[ra] = rb;
    }
    let root = find(&mut parent, 0);
    (0..n).all(|x| find(&mut parent, x) == root)
}

impl MarginalPattern {
    pub fn new(register: QuditRegister, pairs: &[(usize, usize)]) -> Result<Self> {
        let n = register.num_parties();
        if pairs.is_empty() {
            return Err(Error::Pattern("no pairs given".into()));
        }
        let mut norm = Vec::with_capacity(pairs.len());
        for &(a, b) in pairs {
            if a == b || a >= n || b >= n {
                return Err(Error::Pattern(format!(
                    "invalid pair ({a}, {b}) for {n} parties"
                )));
            }
            norm.push((a.min(b), a.max(b)));
        }
        norm.sort_unstable();
        norm.dedup();
        let connected = is_connected(n, &norm);
        Ok(Self {
            register,
            pairs: norm,
            triples: Vec::new(),
            connected,
        })
    }

    /// Every pair of parties.
    pub fn all_pairs(register: QuditRegister) -> Self {
        let n = register.num_parties();
        let pairs: Vec<_> = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .collect();
        Self::new(register, &pairs).expect("at least two parties")
    }

    /// Adds party triples (sorted, deduplicated).
    pub fn with_triples(mut self, triples: &[[usize; 3]]) -> Result<Self> {
        let n = self.register.num_parties();
        let mut ts = Vec::with_capacity(triples.len());
        for t in triples {
            let mut t = *t;
            t.sort_unstable();
            if t[0] == t[1] || t[1] == t[2] || t[2] >= n {
                return Err(Error::Pattern(format!("invalid triple {t:?}")));
            }
            ts.push(t);
        }
        ts.sort_unstable();
        ts.dedup();
        self.triples = ts;
        Ok(self)
    }

    /// All triples of parties.
    pub fn with_all_triples(self) -> Self {
        let n = self.register.num_parties();
        let mut ts = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    ts.push([a, b, c]);
                }
            }
        }
        self.with_triples(&ts).expect("valid triples")
    }

    /// Parses `all`, or comma-separated pairs such as `AB,BC` or `0-1,1-2`.
    /// Three-party tokens (`ABC`, `0-1-2`) become triples.
    pub fn parse(register: QuditRegister, spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if spec.eq_ignore_ascii_case("all") {
            return Ok(Self::all_pairs(register));
        }
        let mut pairs = Vec::new();
        let mut triples = Vec::new();
        for tok in spec.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let parts: Vec<Option<usize>> = if tok.contains('-') {
                tok.split('-').map(parse_party).collect()
            } else {
                tok.chars().map(|c| parse_party(&c.to_string())).collect()
            };
            let parts: Vec<usize> = parts
                .into_iter()
                .collect::<Option<_>>()
                .ok_or_else(|| Error::Pattern(format!("cannot parse `{tok}`")))?;
            match parts.as_slice() {
                [a, b] => pairs.push((*a, *b)),
                [a, b, c] => triples.push([*a, *b, *c]),
                _ => return Err(Error::Pattern(format!("`{tok}` is not a pair or triple"))),
            }
        }
        if pairs.is_empty() {
            for t in &triples {
                pairs.extend([(t[0], t[1]), (t[0], t[2]), (t[1], t[2])]);
            }
        }
        Self::new(register, &pairs)?.with_triples(&triples)
    }

    pub fn register(&self) -> &QuditRegister {
        &self.register
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn triples(&self) -> &[[usize; 3]] {
        &self.triples
    }

    /// Whether the pair graph connects all parties.
    pub fn is_connected(&self) -> bool {
        self.connected
    }

    pub fn contains_pair(&self, a: usize, b: usize) -> bool {
        self.pairs.binary_search(&(a.min(b), a.max(b))).is_ok()
    }

    /// Every pair of `other` is a pair of `self`.
    pub fn covers(&self, other: &MarginalPattern) -> bool {
        self.register == other.register && other.pairs.iter().all(|p| self.pairs.contains(p))
    }

    /// Operators supported inside some pattern pair.
    pub fn subspace(&self) -> OperatorSubspace {
        two_body_subspace(&self.register, &self.pairs).expect("pattern pairs are valid")
    }

    /// Pair of the pattern containing all of `support` (at most two parties).
    pub fn pair_containing(&self, support: &[usize]) -> Option<(usize, usize)> {
        self.pairs
            .iter()
            .copied()
            .find(|&(a, b)| support.iter().all(|&p| p == a || p == b))
    }

    /// E.g. `AB,BC,CD`.
    pub fn label(&self) -> String {
        let mut toks: Vec<String> = self
            .pairs
            .iter()
            .map(|&(a, b)| format!("{}{}", party_name(a), party_name(b)))
            .collect();
        toks.extend(
            self.triples
                .iter()
                .map(|t| t.iter().map(|&p| party_name(p)).collect::<String>()),
        );
        toks.join(",")
    }
}

/// Two-party reduced states for every pair of a pattern.
#[derive(Clone, Debug)]
pub struct MarginalSet {
    pattern: MarginalPattern,
    states: BTreeMap<(usize, usize), DensityOperator>,
}

/// Allowed disagreement between single-party reductions of overlapping pairs.
pub const MARGINAL_CONSISTENCY_TOLERANCE: f64 = 1e-8;

impl MarginalSet {
    /// Validates shapes and that overlapping marginals share their
    /// single-party reductions.
    pub fn new(
        pattern: MarginalPattern,
        states: BTreeMap<(usize, usize), DensityOperator>,
    ) -> Result<Self> {
        let reg = pattern.register();
        for &(a, b) in pattern.pairs() {
            let rho = states
                .get(&(a, b))
                .ok_or_else(|| Error::Pattern(format!("missing marginal for ({a}, {b})")))?;
            if rho.register() != &reg.subregister(&[a, b])? {
                return Err(Error::Pattern(format!(
                    "marginal ({a}, {b}) has wrong dimensions"
                )));
            }
        }
        if states.len() != pattern.pairs().len() {
            return Err(Error::Pattern(
                "marginals given for pairs outside the pattern".into(),
            ));
        }
        for p in 0..reg.num_parties() {
            let mut reference: Option<DensityOperator> = None;
            for (&(a, b), rho) in &states {
                let slot = if a == p {
                    0
                } else if b == p {
                    1
                } else {
                    continue;
                };
                let red = rho.marginal(&[slot])?;
                match &reference {
                    None => reference = Some(red),
                    Some(r) => {
                        let diff = r.as_hermitian().max_abs_diff(red.as_hermitian());
                        if diff > MARGINAL_CONSISTENCY_TOLERANCE {
                            return Err(Error::Pattern(format!(
                                "marginals disagree on party {} by {diff:.2e}",
                                party_name(p)
                            )));
                        }
                    }
                }
            }
        }
        Ok(Self { pattern, states })
    }

    /// Marginals of a global state.
    pub fn from_state(rho: &DensityOperator, pattern: &MarginalPattern) -> Result<Self> {
        if rho.register() != pattern.register() {
            return Err(Error::InvalidRegister(format!(
                "state on {} but pattern on {}",
                rho.register().label(),
                pattern.register().label()
            )));
        }
        let states = pattern
            .pairs()
            .iter()
            .map(|&(a, b)| Ok(((a, b), rho.marginal(&[a, b])?)))
            .collect::<Result<_>>()?;
        Self::new(pattern.clone(), states)
    }

    pub fn pattern(&self) -> &MarginalPattern {
        &self.pattern
    }

    pub fn marginal(&self, a: usize, b: usize) -> Option<&DensityOperator> {
        self.states.get(&(a.min(b), a.max(b)))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, usize), &DensityOperator)> {
        self.states.iter()
    }

    /// Expectation of string `k` of `subspace`, computed from the marginal
    /// of a pair containing its support.
    pub fn expectation(&self, subspace: &OperatorSubspace, k: usize) -> Result<f64> {
        let support = subspace.string(k).support();
        let (a, b) = self.pattern.pair_containing(&support).ok_or_else(|| {
            Error::Pattern(format!(
                "operator {} is not supported on a known pair",
                subspace.label(k)
            ))
        })?;
        let op = subspace.sparse_restricted(k, &[a, b]);
        Ok(op.trace_with(self.states[&(a, b)].matrix()))
    }
}
