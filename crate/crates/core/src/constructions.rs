//! Explicit 2-caps: parabolas over F_{3^k}, the partition of F_3^{2k} into
//! translated parabolas, the four-to-five extension, odd-dimension lower
//! bounds, embeddings, and hardcoded reference sets.
//!
//! Every family is also exposed as a named [`Construction`] in a
//! [`ConstructionRegistry`], which is what the command line dispatches on.

use std::sync::Arc;

use crate::error::{CapError, Result};
use crate::gf::{ext_add, irreducible_modulus, ExtElement, ExtModulus, F3};
use crate::sidon::is_d_cap;
use crate::space::{CapSet, Point};

/// Largest `k` accepted by the parabola and partition constructions.
pub const MAX_PARABOLA_K: usize = 5;

fn parabola_modulus(k: usize) -> Result<Arc<ExtModulus>> {
    if !(1..=MAX_PARABOLA_K).contains(&k) {
        return Err(CapError::DegreeOutOfRange(k));
    }
    irreducible_modulus(k)
}

fn parabola_with(modulus: &Arc<ExtModulus>, shift: &ExtElement) -> Result<CapSet> {
    let k = modulus.degree();
    let points = ExtElement::all(modulus)
        .map(|x| {
            let y = ext_add(&x.square(), shift)?;
            let digits: Vec<u8> = x
                .to_vector()
                .into_iter()
                .chain(y.to_vector())
                .map(F3::value)
                .collect();
            Point::from_digits(&digits)
        })
        .collect::<Result<Vec<_>>>()?;
    CapSet::new(2 * k, points)
}

/// `{(x, x^2 + a) : x in F_{3^k}}` in F_3^{2k}; `x` fills the first `k`
/// coordinates. `shift = None` means `a = 0`.
pub fn parabola_sidon(k: usize, shift: Option<&ExtElement>) -> Result<CapSet> {
    let modulus = parabola_modulus(k)?;
    let zero = ExtElement::zero(&modulus);
    let shift = shift.unwrap_or(&zero);
    if shift.modulus().as_ref() != modulus.as_ref() {
        return Err(CapError::ModulusMismatch);
    }
    parabola_with(&modulus, shift)
}

/// The translates `S_a` of the parabola, for every `a` in index order.
pub fn partition_even(k: usize) -> Result<Vec<CapSet>> {
    let modulus = parabola_modulus(k)?;
    ExtElement::all(&modulus)
        .map(|a| parabola_with(&modulus, &a))
        .collect()
}

/// Adds `a + b + c + d` to a 2-cap `{a, b, c, d}`.
pub fn extend_four(s: &CapSet) -> Result<CapSet> {
    if s.len() != 4 || !is_d_cap(s, 2)? {
        return Err(CapError::NotACap(2));
    }
    s.with(s.sum())
}

/// Pads every point with leading zeros up to dimension `n`.
pub fn embed(s: &CapSet, n: usize) -> Result<CapSet> {
    if n < s.dim() {
        return Err(CapError::DimensionMismatch {
            expected: s.dim(),
            found: n,
        });
    }
    let extra = n - s.dim();
    let points = s
        .iter()
        .map(|p| p.embed(extra))
        .collect::<Result<Vec<_>>>()?;
    CapSet::new(n, points)
}

/// The parabola of F_3^{n-1} placed in the 0-affine subspace, plus e_1.
pub fn odd_lower_bound(n: usize) -> Result<CapSet> {
    if n.is_multiple_of(2) {
        return Err(CapError::EvenDimension(n));
    }
    if !(3..=2 * MAX_PARABOLA_K + 1).contains(&n) {
        return Err(CapError::UnsupportedDimension(n));
    }
    let base = embed(&parabola_sidon((n - 1) / 2, None)?, n)?;
    base.with(Point::basis(n, 1))
}

const DIM5_MAX13: [&str; 13] = [
    "00000", "00001", "00010", "00100", "00111", "01000", "01112", "02120", "02212", "10000",
    "10121", "20102", "22022",
];

const DIM7_COMPLETE33: [&str; 33] = [
    "0000000", "0001001", "0002001", "0010100", "0011121", "0012111", "0020100", "0021111",
    "0022121", "0100120", "0101021", "0102221", "0110211", "0111102", "0112022", "0120202",
    "0121110", "0122020", "0200120", "0201221", "0202021", "0210202", "0211020", "0212110",
    "0220211", "0221022", "0222102", "1000000", "1000001", "2001020", "2001101", "2001112",
    "2001122",
];

/// Fifth points of the five maximal 2-caps of F_3^3 containing
/// {0, e_1, e_2, e_3}.
const DIM3_FIFTH: [&str; 5] = ["111", "122", "212", "221", "222"];

/// Names accepted by [`paper_witness`].
pub const WITNESS_NAMES: [&str; 8] = [
    "dim5_max13",
    "dim7_complete33",
    "dim7_seed27",
    "dim3_C1",
    "dim3_C2",
    "dim3_C3",
    "dim3_C4",
    "dim3_C5",
];

/// The i-th (1-based) maximal 2-cap of F_3^3 through {0, e_1, e_2, e_3}.
pub fn dim3_cap(i: usize) -> Result<CapSet> {
    let fifth = DIM3_FIFTH
        .get(i.wrapping_sub(1))
        .ok_or_else(|| CapError::UnknownWitness(format!("dim3_C{i}")))?;
    CapSet::parse(3, &["000", "100", "010", "001", fifth])
}

/// Reference point sets by name. `dim7_seed27` is the leading-zero part of
/// `dim7_complete33`, a 27-point 2-cap inside the 0-affine subspace.
pub fn paper_witness(name: &str) -> Result<CapSet> {
    match name {
        "dim5_max13" => CapSet::parse(5, &DIM5_MAX13),
        "dim7_complete33" => CapSet::parse(7, &DIM7_COMPLETE33),
        "dim7_seed27" => {
            let seed: Vec<&str> = DIM7_COMPLETE33
                .iter()
                .copied()
                .filter(|w| w.starts_with('0'))
                .collect();
            CapSet::parse(7, &seed)
        }
        _ => match name.strip_prefix("dim3_C").and_then(|i| i.parse().ok()) {
            Some(i) => dim3_cap(i),
            None => Err(CapError::UnknownWitness(name.to_string())),
        },
    }
}

/// Parameters shared by every construction; each kind reads what it needs.
#[derive(Clone, Debug, Default)]
pub struct ConstructParams {
    pub k: Option<usize>,
    pub n: Option<usize>,
    /// Parabola shift as a ternary word of length `k`.
    pub shift: Option<String>,
    pub name: Option<String>,
    pub input: Option<CapSet>,
}

impl ConstructParams {
    fn need_k(&self) -> Result<usize> {
        self.k
            .ok_or_else(|| CapError::InvalidParams("missing parameter k".into()))
    }

    fn need_n(&self) -> Result<usize> {
        self.n
            .ok_or_else(|| CapError::InvalidParams("missing parameter n".into()))
    }
}

pub trait Construction: Send + Sync {
    fn name(&self) -> &'static str;
    fn summary(&self) -> &'static str;
    /// One or more point sets; only the partition yields several.
    fn build(&self, params: &ConstructParams) -> Result<Vec<CapSet>>;
}

struct Parabola;

impl Construction for Parabola {
    fn name(&self) -> &'static str {
        "parabola"
    }

    fn summary(&self) -> &'static str {
        "{(x, x^2 + a)} over F_{3^k}, a Sidon set of size 3^k in F_3^{2k}"
    }

    fn build(&self, params: &ConstructParams) -> Result<Vec<CapSet>> {
        let k = params.need_k()?;
        let modulus = parabola_modulus(k)?;
        let shift = match &params.shift {
            None => None,
            Some(word) => {
                let p: Point = word.parse()?;
                let coords: Vec<F3> = p
                    .digits()
                    .iter()
                    .map(|&d| F3::new(d))
                    .collect::<Result<_>>()?;
                Some(ExtElement::from_vector(&modulus, &coords)?)
            }
        };
        Ok(vec![parabola_sidon(k, shift.as_ref())?])
    }
}

struct Partition;

impl Construction for Partition {
    fn name(&self) -> &'static str {
        "partition"
    }

    fn summary(&self) -> &'static str {
        "partition of F_3^{2k} into 3^k translated parabolas"
    }

    fn build(&self, params: &ConstructParams) -> Result<Vec<CapSet>> {
        partition_even(params.need_k()?)
    }
}

struct OddLowerBound;

impl Construction for OddLowerBound {
    fn name(&self) -> &'static str {
        "oddlb"
    }

    fn summary(&self) -> &'static str {
        "parabola of F_3^{n-1} plus e_1, size 3^{(n-1)/2} + 1"
    }

    fn build(&self, params: &ConstructParams) -> Result<Vec<CapSet>> {
        Ok(vec![odd_lower_bound(params.need_n()?)?])
    }
}

struct ExtendFour;

impl Construction for ExtendFour {
    fn name(&self) -> &'static str {
        "extend4"
    }

    fn summary(&self) -> &'static str {
        "a size-4 2-cap plus the sum of its points"
    }

    fn build(&self, params: &ConstructParams) -> Result<Vec<CapSet>> {
        let input = params
            .input
            .as_ref()
            .ok_or_else(|| CapError::InvalidParams("extend4 needs an input set".into()))?;
        Ok(vec![extend_four(input)?])
    }
}

struct Embed;

impl Construction for Embed {
    fn name(&self) -> &'static str {
        "embed"
    }

    fn summary(&self) -> &'static str {
        "an input set padded with leading zeros to dimension n"
    }

    fn build(&self, params: &ConstructParams) -> Result<Vec<CapSet>> {
        let input = params
            .input
            .as_ref()
            .ok_or_else(|| CapError::InvalidParams("embed needs an input set".into()))?;
        Ok(vec![embed(input, params.need_n()?)?])
    }
}

struct Witness;

impl Construction for Witness {
    fn name(&self) -> &'static str {
        "witness"
    }

    fn summary(&self) -> &'static str {
        "a hardcoded reference set (see WITNESS_NAMES)"
    }

    fn build(&self, params: &ConstructParams) -> Result<Vec<CapSet>> {
        let name = params
            .name
            .as_deref()
            .ok_or_else(|| CapError::InvalidParams("witness needs a name".into()))?;
        Ok(vec![paper_witness(name)?])
    }
}

/// Constructions addressable by name.
pub struct ConstructionRegistry {
    entries: Vec<Box<dyn Construction>>,
}

impl Default for ConstructionRegistry {
    fn default() -> Self {
        let mut r = ConstructionRegistry::empty();
        r.register(Box::new(Parabola));
        r.register(Box::new(Partition));
        r.register(Box::new(OddLowerBound));
        r.register(Box::new(ExtendFour));
        r.register(Box::new(Embed));
        r.register(Box::new(Witness));
        r
    }
}

impl ConstructionRegistry {
    pub fn empty() -> Self {
        ConstructionRegistry {
            entries: Vec::new(),
        }
    }

    /// Later registrations shadow earlier ones with the same name.
    pub fn register(&mut self, c: Box<dyn Construction>) {
        self.entries.retain(|e| e.name() != c.name());
        self.entries.push(c);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Construction> {
        self.entries
            .iter()
            .find(|e| e.name() == name)
            .map(|e| e.as_ref())
            .ok_or_else(|| CapError::UnknownStrategy {
                kind: "construction",
                name: name.to_string(),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name()).collect()
    }
}
