//! Registry of the closed-form enumerative claims: Euclidean distance
//! degree polynomials in the camera count with their proof status,
//! multidegree values for the fourteen representative families, and the
//! leading-coefficient pattern tying the two together.

use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClaimKind {
    Theorem,
    Conjecture,
}

impl ClaimKind {
    pub fn label(&self) -> &'static str {
        match self {
            ClaimKind::Theorem => "theorem",
            ClaimKind::Conjecture => "conjecture",
        }
    }
}

/// A closed-form EDD claim: the count for n cameras (or n points in the
/// resectioning rows) is `p(n) = (Σ numer[i]·n^i) / denom` for
/// `n ≥ valid_from`.
#[derive(Debug, Clone)]
pub struct EddClaim {
    pub tag: &'static str,
    pub kind: ClaimKind,
    pub valid_from: usize,
    /// Coefficients of n^0, n^1, … of the numerator.
    pub numer: &'static [i64],
    pub denom: i64,
}

impl EddClaim {
    /// Exact value of the formula at n. The numerator is always divisible
    /// by the denominator on integers.
    pub fn eval(&self, n: usize) -> i64 {
        let n = n as i64;
        let mut acc = 0i64;
        let mut pw = 1i64;
        for &c in self.numer {
            acc += c * pw;
            pw *= n;
        }
        assert_eq!(acc % self.denom, 0, "formula for {} not integral at n={n}", self.tag);
        acc / self.denom
    }

    pub fn in_range(&self, n: usize) -> bool {
        n >= self.valid_from
    }

    pub fn degree(&self) -> usize {
        self.numer.len() - 1
    }

    /// Leading coefficient as a reduced fraction.
    pub fn leading(&self) -> (i64, i64) {
        reduce(*self.numer.last().expect("nonempty"), self.denom)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "tag": self.tag,
            "kind": self.kind.label(),
            "valid_from": self.valid_from,
            "numerator_coefficients": self.numer,
            "denominator": self.denom,
        })
    }
}

fn reduce(a: i64, b: i64) -> (i64, i64) {
    fn gcd(x: i64, y: i64) -> i64 {
        if y == 0 { x.abs() } else { gcd(y, x % y) }
    }
    let g = gcd(a, b).max(1);
    let s = if b < 0 { -1 } else { 1 };
    (s * a / g, s * b / g)
}

/// All twenty closed-form EDD rows, in catalogue order.
pub fn edd_claims() -> Vec<EddClaim> {
    use ClaimKind::*;
    let c = |tag, kind, valid_from, numer, denom| EddClaim { tag, kind, valid_from, numer, denom };
    vec![
        c("M^{1,1}", Theorem, 1, &[-2, 3], 1),
        c("M^{2,1}", Theorem, 2, &[6, -19, 9], 2),
        c("M^{2,2}", Conjecture, 1, &[6, -13, 9], 2),
        c("M^{3,1}", Conjecture, 4, &[-8, 44, -39, 9], 2),
        c("M^{3,2}", Theorem, 3, &[-8, 16, -21, 9], 2),
        c("M^{3,3}", Conjecture, 1, &[-8, 22, -21, 9], 2),
        c("L^{3,2}", Conjecture, 4, &[24, -52, 121, -108, 27], 4),
        c("L^{3,3}", Conjecture, 2, &[24, -86, 109, -54, 27], 4),
        c("L^{L,3,2}", Conjecture, 4, &[-6, 14, -21, 9], 1),
        c("L^{L,3,3}", Conjecture, 1, &[-6, 15, -12, 9], 1),
        c("L^{L^2,3,2}", Conjecture, 1, &[4, -10, 9], 1),
        c("L^{L^2,3,3}", Conjecture, 1, &[4, -7, 9], 1),
        c("L^{L^3,3,2}", Conjecture, 1, &[-2, 6], 1),
        c("L^{L^3,3,3}", Conjecture, 1, &[-2, 6], 1),
        c("R^{1,1}", Conjecture, 4, &[-8, 3], 1),
        c("R^{2,1}", Conjecture, 6, &[216, -115, 15], 2),
        c("R^{2,2}", Conjecture, 5, &[147, -84, 12], 1),
        c("R^{3,1}", Conjecture, 8, &[-624, 1586, -317, 21], 2),
        c("R^{3,2}", Conjecture, 6, &[-7740, 5068, -1104, 80], 3),
        c("R^{3,3}", Conjecture, 6, &[-8268, 5456, -1200, 88], 3),
    ]
}

pub fn edd_claim(tag: &str) -> Option<EddClaim> {
    edd_claims().into_iter().find(|c| c.tag == tag)
}

/// The claimed multidegree for one of the fourteen representative
/// families, or None when the codimension profile is not covered by the
/// claim (for instance profiles that are invalid for the family).
///
/// `sigma` is the full codimension vector; trailing zeros and ordering are
/// irrelevant because the multidegree function is symmetric.
pub fn claimed_multidegree(tag: &str, sigma: &[usize]) -> Option<usize> {
    let mut profile: Vec<usize> = sigma.iter().copied().filter(|&d| d > 0).collect();
    profile.sort_unstable_by(|a, b| b.cmp(a));
    match tag {
        "M^{1,1}" | "M^{2,1}" | "M^{2,2}" | "M^{3,1}" | "M^{3,2}" | "M^{3,3}" => Some(1),
        "L^{3,3}" | "L^{L,3,3}" | "L^{L^2,3,3}" | "L^{L^3,3,3}" => Some(2),
        "L^{3,2}" => match profile.as_slice() {
            [2, 2] => Some(1),
            [2, 1, 1] => Some(1),
            [1, 1, 1, 1] => Some(2),
            _ => None,
        },
        "L^{L,3,2}" => match profile.as_slice() {
            [2, 1] => Some(1),
            [1, 1, 1] => Some(2),
            _ => None,
        },
        "L^{L^2,3,2}" => match profile.as_slice() {
            [2] => Some(1),
            [1, 1] => Some(2),
            _ => None,
        },
        "L^{L^3,3,2}" => match profile.as_slice() {
            [1] => Some(2),
            _ => None,
        },
        _ => None,
    }
}

/// The symmetric multidegree D(1,…,1,0,…,0) of a representative family.
pub fn d_one(tag: &str) -> Option<usize> {
    match tag {
        "M^{1,1}" | "M^{2,1}" | "M^{2,2}" | "M^{3,1}" | "M^{3,2}" | "M^{3,3}" => Some(1),
        "L^{3,2}" | "L^{3,3}" | "L^{L,3,2}" | "L^{L,3,3}" | "L^{L^2,3,2}" | "L^{L^2,3,3}"
        | "L^{L^3,3,2}" | "L^{L^3,3,3}" => Some(2),
        _ => None,
    }
}

/// The fourteen multiview tags that carry a closed-form EDD polynomial
/// (the resectioning rows are excluded).
pub fn multiview_claim_tags() -> Vec<&'static str> {
    edd_claims()
        .iter()
        .map(|c| c.tag)
        .filter(|t| !t.starts_with("R^"))
        .collect()
}

/// Serialize the whole registry; the repository's claims.json mirrors
/// this verbatim.
pub fn registry_json() -> Value {
    let multideg: Vec<Value> = vec![
        json!({"tag": "M^{N,h}", "profiles": "all", "value": 1,
               "tags": ["M^{1,1}", "M^{2,1}", "M^{2,2}", "M^{3,1}", "M^{3,2}", "M^{3,3}"]}),
        json!({"tag": "L^{L^gamma,3,3}", "profiles": "all", "value": 2,
               "tags": ["L^{3,3}", "L^{L,3,3}", "L^{L^2,3,3}", "L^{L^3,3,3}"]}),
        json!({"tag": "L^{3,2}", "cases": [
            {"profile": [2, 2], "value": 1},
            {"profile": [2, 1, 1], "value": 1},
            {"profile": [1, 1, 1, 1], "value": 2}]}),
        json!({"tag": "L^{L,3,2}", "cases": [
            {"profile": [2, 1], "value": 1},
            {"profile": [1, 1, 1], "value": 2}]}),
        json!({"tag": "L^{L^2,3,2}", "cases": [
            {"profile": [2], "value": 1},
            {"profile": [1, 1], "value": 2}]}),
        json!({"tag": "L^{L^3,3,2}", "cases": [
            {"profile": [1], "value": 2}]}),
    ];
    json!({
        "edd": edd_claims().iter().map(|c| c.to_json()).collect::<Vec<_>>(),
        "multidegree": multideg,
    })
}
