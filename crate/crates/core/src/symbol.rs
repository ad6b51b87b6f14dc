//! Frequency symbols `m(xi)` with verified homogeneity and reality metadata.
//!
//! Algebraic symbols are finite sums `c * xi^beta * |xi|^p`; the class is
//! closed under differentiation, so derived symbols stay in closed form.
//! Anything else is a custom closure, differentiated by a fourth-order
//! central stencil whose step scales with `|xi|`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::grid::norm;

/// Multi-index of up to three components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, serde::Serialize)]
pub struct MultiIndex(pub [u32; 3]);

impl MultiIndex {
    pub fn zero() -> Self {
        Self([0; 3])
    }

    pub fn unit(axis: usize) -> Self {
        let mut a = [0; 3];
        a[axis] = 1;
        Self(a)
    }

    pub fn from_slice(a: &[u32]) -> Self {
        let mut out = [0; 3];
        out[..a.len()].copy_from_slice(a);
        Self(out)
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn factorial(&self) -> f64 {
        self.0
            .iter()
            .map(|&k| (1..=k).map(f64::from).product::<f64>())
            .product()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self([self.0[0] + other.0[0], self.0[1] + other.0[1], self.0[2] + other.0[2]])
    }

    /// `self - other` if `other <= self` componentwise.
    pub fn checked_sub(&self, other: &Self) -> Option<Self> {
        Some(Self([
            self.0[0].checked_sub(other.0[0])?,
            self.0[1].checked_sub(other.0[1])?,
            self.0[2].checked_sub(other.0[2])?,
        ]))
    }

    /// `x^alpha` with `0^0 = 1`.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.0.iter())
            .map(|(v, &k)| v.powi(k as i32))
            .product()
    }

    /// All multi-indices in `dim` variables with order at most `max_order`,
    /// sorted by order.
    pub fn all_up_to(dim: usize, max_order: u32) -> Vec<Self> {
        let mut out = Vec::new();
        for order in 0..=max_order {
            let range = |d: usize| if d < dim { 0..=order } else { 0..=0 };
            for a in range(0) {
                for b in range(1) {
                    for c in range(2) {
                        if a + b + c == order {
                            out.push(Self([a, b, c]));
                        }
                    }
                }
            }
        }
        out
    }

    /// Multi-indices `beta <= self` componentwise.
    pub fn sub_indices(&self) -> Vec<Self> {
        let mut out = Vec::new();
        for a in 0..=self.0[0] {
            for b in 0..=self.0[1] {
                for c in 0..=self.0[2] {
                    out.push(Self([a, b, c]));
                }
            }
        }
        out
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}+{}", self.0[0], self.0[1], self.0[2])
    }
}

/// One term `coef * xi^powers * |xi|^radial`.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coef: Complex64,
    pub powers: MultiIndex,
    pub radial: f64,
}

impl Term {
    fn eval(&self, xi: &[f64], r: f64) -> Complex64 {
        if self.radial == 0.0 {
            self.coef * self.powers.monomial(xi)
        } else {
            self.coef * self.powers.monomial(xi) * r.powf(self.radial)
        }
    }

    fn differentiate(&self, axis: usize) -> Vec<Term> {
        let mut out = Vec::with_capacity(2);
        let k = self.powers.0[axis];
        if k > 0 {
            let mut powers = self.powers;
            powers.0[axis] -= 1;
            out.push(Term {
                coef: self.coef * f64::from(k),
                powers,
                radial: self.radial,
            });
        }
        if self.radial != 0.0 {
            let mut powers = self.powers;
            powers.0[axis] += 1;
            out.push(Term {
                coef: self.coef * self.radial,
                powers,
                radial: self.radial - 2.0,
            });
        }
        out
    }
}

fn simplify(terms: Vec<Term>) -> Vec<Term> {
    let mut out: Vec<Term> = Vec::new();
    for t in terms {
        if t.coef == Complex64::new(0.0, 0.0) {
            continue;
        }
        match out
            .iter_mut()
            .find(|o| o.powers == t.powers && (o.radial - t.radial).abs() < 1e-12)
        {
            Some(o) => o.coef += t.coef,
            None => out.push(t),
        }
    }
    out.retain(|t| t.coef.norm() > 1e-300);
    out
}

type Evaluator = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Algebraic(Vec<Term>),
    Custom(Evaluator),
}

/// A multiplier `m(xi)` on `R^dim`.
#[derive(Clone)]
pub struct FrequencySymbol {
    id: String,
    dim: usize,
    kind: Kind,
    degree: Option<f64>,
    real: bool,
}

impl fmt::Debug for FrequencySymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FrequencySymbol")
            .field("id", &self.id)
            .field("dim", &self.dim)
            .field("degree", &self.degree)
            .field("real", &self.real)
            .finish()
    }
}

const HOMOGENEITY_TOL: f64 = 1e-10;
const REALITY_TOL: f64 = 1e-12;
const FD_STEP: f64 = 1e-2;

/// Fixed probe frequencies used to verify metadata.
fn probes(dim: usize) -> Vec<Vec<f64>> {
    let raw: [[f64; 3]; 8] = [
        [0.37, -1.3, 0.61],
        [-1.3, 0.25, -2.2],
        [5.1, 2.7, 0.9],
        [-0.8, -0.45, 1.7],
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.3],
        [-2.5, 3.5, -0.2],
        [0.11, 0.07, -0.05],
    ];
    raw.iter()
        .map(|p| p[..dim].to_vec())
        .filter(|p| norm(p) > 0.0)
        .collect()
}

impl FrequencySymbol {
    fn build(id: String, dim: usize, kind: Kind, degree: Option<f64>) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(invalid("dim", format!("{dim} not in 1..=3")));
        }
        let mut sym = Self {
            id,
            dim,
            kind,
            degree,
            real: false,
        };
        sym.verify()?;
        Ok(sym)
    }

    fn verify(&mut self) -> Result<()> {
        let mut real_dev: f64 = 0.0;
        let mut hom_dev: f64 = 0.0;
        for xi in probes(self.dim) {
            let m = self.evaluate(&xi);
            if !m.re.is_finite() || !m.im.is_finite() {
                return Err(Error::SymbolNotFinite { id: self.id.clone() });
            }
            let neg: Vec<f64> = xi.iter().map(|v| -v).collect();
            let scale = m.norm().max(1e-300);
            real_dev = real_dev.max((self.evaluate(&neg) - m.conj()).norm() / scale);
            if let Some(d) = self.degree {
                for lambda in [2.0f64, 4.0] {
                    let scaled: Vec<f64> = xi.iter().map(|v| lambda * v).collect();
                    let expect = m * lambda.powf(d);
                    let dev = (self.evaluate(&scaled) - expect).norm() / expect.norm().max(1e-300);
                    if m.norm() > 1e-300 {
                        hom_dev = hom_dev.max(dev);
                    }
                }
            }
        }
        if hom_dev > HOMOGENEITY_TOL {
            return Err(Error::SymbolProperty {
                id: self.id.clone(),
                property: "homogeneity",
                deviation: hom_dev,
            });
        }
        self.real = real_dev <= REALITY_TOL;
        Ok(())
    }

    /// `m = 1`.
    pub fn identity(dim: usize) -> Result<Self> {
        Self::abs_pow(dim, 0.0)
    }

    /// `|xi|^s`.
    pub fn abs_pow(dim: usize, s: f64) -> Result<Self> {
        if !s.is_finite() {
            return Err(invalid("s", "must be finite"));
        }
        Self::algebraic(
            dim,
            format!("abs_pow:{s}"),
            vec![Term {
                coef: Complex64::new(1.0, 0.0),
                powers: MultiIndex::zero(),
                radial: s,
            }],
        )
    }

    /// Riesz symbol `i xi_j / |xi|` (axis `j` counted from 0).
    pub fn riesz(dim: usize, j: usize) -> Result<Self> {
        if j >= dim {
            return Err(invalid("j", format!("axis {j} out of range for dim {dim}")));
        }
        Self::algebraic(
            dim,
            format!("riesz:{j}"),
            vec![Term {
                coef: Complex64::new(0.0, 1.0),
                powers: MultiIndex::unit(j),
                radial: -1.0,
            }],
        )
    }

    /// Symbol of `d^alpha`: `(2 pi i xi)^alpha`.
    pub fn derivative(dim: usize, alpha: MultiIndex) -> Result<Self> {
        let coef = Complex64::new(0.0, 2.0 * PI).powu(alpha.order());
        Self::algebraic(
            dim,
            format!("partial:{alpha}"),
            vec![Term {
                coef,
                powers: alpha,
                radial: 0.0,
            }],
        )
    }

    /// Sum of `c xi^beta |xi|^p` terms; homogeneity is inferred when all
    /// terms share a degree.
    pub fn algebraic(dim: usize, id: impl Into<String>, terms: Vec<Term>) -> Result<Self> {
        if terms.iter().any(|t| t.powers.0[dim..].iter().any(|&k| k != 0)) {
            return Err(invalid("terms", "power on an axis beyond dim"));
        }
        let terms = simplify(terms);
        let degrees: Vec<f64> = terms
            .iter()
            .map(|t| f64::from(t.powers.order()) + t.radial)
            .collect();
        let degree = match degrees.first() {
            None => Some(0.0),
            Some(&d) if degrees.iter().all(|e| (e - d).abs() < 1e-12) => Some(d),
            _ => None,
        };
        Self::build(id.into(), dim, Kind::Algebraic(terms), degree)
    }

    /// Arbitrary evaluator with claimed homogeneity degree (verified).
    pub fn custom(
        dim: usize,
        id: impl Into<String>,
        degree: Option<f64>,
        f: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static,
    ) -> Result<Self> {
        Self::build(id.into(), dim, Kind::Custom(Arc::new(f)), degree)
    }

    /// Parse `abs_pow:s`, `riesz:j`, `identity` or `derived:<base>,<alpha>,<s>`
    /// with `alpha` written `a+b+c`.
    pub fn parse(dim: usize, id: &str) -> Result<Self> {
        let id = id.trim();
        if id == "identity" {
            return Self::identity(dim);
        }
        if let Some(rest) = id.strip_prefix("derived:") {
            let (head, s) = rest
                .rsplit_once(',')
                .ok_or_else(|| invalid("symbol", format!("malformed derived id `{id}`")))?;
            let (base, alpha) = head
                .rsplit_once(',')
                .ok_or_else(|| invalid("symbol", format!("malformed derived id `{id}`")))?;
            let s: f64 = s
                .parse()
                .map_err(|_| invalid("symbol", format!("bad order `{s}`")))?;
            let parts: Vec<u32> = alpha
                .split('+')
                .map(|p| p.trim().parse::<u32>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| invalid("symbol", format!("bad multi-index `{alpha}`")))?;
            if parts.len() > 3 {
                return Err(invalid("symbol", "multi-index longer than three"));
            }
            let base = Self::parse(dim, base)?;
            return base.derived(MultiIndex::from_slice(&parts), s);
        }
        if let Some(s) = id.strip_prefix("abs_pow:") {
            let s: f64 = s.parse().map_err(|_| invalid("symbol", format!("bad order `{s}`")))?;
            return Self::abs_pow(dim, s);
        }
        if let Some(j) = id.strip_prefix("riesz:") {
            let j: usize = j.parse().map_err(|_| invalid("symbol", format!("bad axis `{j}`")))?;
            return Self::riesz(dim, j);
        }
        Err(invalid("symbol", format!("unknown symbol id `{id}`")))
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> Option<f64> {
        self.degree
    }

    /// Whether `m(-xi) = conj(m(xi))` held on every probe.
    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn terms(&self) -> Option<&[Term]> {
        match &self.kind {
            Kind::Algebraic(t) => Some(t),
            Kind::Custom(_) => None,
        }
    }

    pub fn evaluate(&self, xi: &[f64]) -> Complex64 {
        let xi = &xi[..self.dim];
        match &self.kind {
            Kind::Algebraic(terms) => {
                let r = norm(xi);
                terms.iter().map(|t| t.eval(xi, r)).sum()
            }
            Kind::Custom(f) => f(xi),
        }
    }

    /// `m_{alpha,s}(xi) = (2 pi i)^{-|alpha|} |xi|^{|alpha|-s} d^alpha(|xi|^s m(xi))`.
    pub fn derived(&self, alpha: MultiIndex, s: f64) -> Result<Self> {
        let order = alpha.order();
        if order > 2 {
            return Err(Error::Unsupported(format!(
                "derived symbols of order {order} > 2"
            )));
        }
        if alpha.0[self.dim..].iter().any(|&k| k != 0) {
            return Err(invalid("alpha", "component beyond dim"));
        }
        if order == 0 {
            return Ok(self.clone());
        }
        let id = format!("derived:{},{},{}", self.id, alpha, s);
        let prefactor = Complex64::new(0.0, 2.0 * PI).powi(-(order as i32));
        match &self.kind {
            Kind::Algebraic(terms) => {
                let mut current: Vec<Term> = terms
                    .iter()
                    .map(|t| Term {
                        radial: t.radial + s,
                        ..t.clone()
                    })
                    .collect();
                for axis in 0..self.dim {
                    for _ in 0..alpha.0[axis] {
                        current = simplify(current.iter().flat_map(|t| t.differentiate(axis)).collect());
                    }
                }
                let terms = current
                    .into_iter()
                    .map(|t| Term {
                        coef: t.coef * prefactor,
                        powers: t.powers,
                        radial: t.radial + f64::from(order) - s,
                    })
                    .collect();
                let sym = Self::algebraic(self.dim, id, terms)?;
                if sym.degree.is_none() && self.degree.is_some() {
                    // cancellation can leave no terms; keep the parent's degree
                    return Self::build(sym.id, sym.dim, sym.kind, self.degree);
                }
                Ok(sym)
            }
            Kind::Custom(_) => {
                let base = self.clone();
                let axes: Vec<usize> = (0..self.dim)
                    .flat_map(|a| std::iter::repeat_n(a, alpha.0[a] as usize))
                    .collect();
                let degree = self.degree;
                let eval = move |xi: &[f64]| {
                    let r = norm(xi);
                    if r == 0.0 {
                        return Complex64::new(0.0, 0.0);
                    }
                    // for homogeneous symbols, difference on the unit sphere and
                    // rescale, so homogeneity holds to rounding
                    let (xi, rescale) = match degree {
                        Some(d) => (xi.iter().map(|v| v / r).collect::<Vec<f64>>(), r.powf(d)),
                        None => (xi.to_vec(), 1.0),
                    };
                    let xi = xi.as_slice();
                    let r = norm(xi);
                    let g = |x: &[f64]| base.evaluate(x) * norm(x).powf(s);
                    let h = FD_STEP * r;
                    let d = match axes.as_slice() {
                        [a] => first_difference(&g, xi, *a, h),
                        [a, b] if a == b => second_difference(&g, xi, *a, h),
                        [a, b] => {
                            let inner = |x: &[f64]| first_difference(&g, x, *b, h);
                            first_difference(&inner, xi, *a, h)
                        }
                        _ => unreachable!(),
                    };
                    prefactor * r.powf(f64::from(order) - s) * d * rescale
                };
                Self::build(id, self.dim, Kind::Custom(Arc::new(eval)), self.degree)
            }
        }
    }
}

fn shifted(x: &[f64], axis: usize, by: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    y[axis] += by;
    y
}

fn first_difference(g: &dyn Fn(&[f64]) -> Complex64, x: &[f64], axis: usize, h: f64) -> Complex64 {
    let f = |k: f64| g(&shifted(x, axis, k * h));
    (f(-2.0) - f(-1.0) * 8.0 + f(1.0) * 8.0 - f(2.0)) / (12.0 * h)
}

fn second_difference(g: &dyn Fn(&[f64]) -> Complex64, x: &[f64], axis: usize, h: f64) -> Complex64 {
    let f = |k: f64| g(&shifted(x, axis, k * h));
    (-f(-2.0) + f(-1.0) * 16.0 - f(0.0) * 30.0 + f(1.0) * 16.0 - f(2.0)) / (12.0 * h * h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1e-300)
    }

    #[test]
    fn first_derived_symbol_closed_form() {
        let s = 0.7;
        let m = FrequencySymbol::identity(1).unwrap().derived(MultiIndex::unit(0), s).unwrap();
        for xi in [-2.3, -0.4, 0.9, 3.0] {
            let expect = Complex64::new(0.0, 2.0 * PI).inv() * s * xi / f64::abs(xi);
            assert!(close(m.evaluate(&[xi]), expect, 1e-12));
        }
        assert_eq!(m.degree(), Some(0.0));
    }

    #[test]
    fn zero_alpha_is_identity() {
        let r = FrequencySymbol::riesz(2, 1).unwrap();
        let d = r.derived(MultiIndex::zero(), 1.5).unwrap();
        assert_eq!(d.id(), r.id());
    }

    #[test]
    fn composition_of_derived_symbols() {
        for base in [FrequencySymbol::identity(2).unwrap(), FrequencySymbol::riesz(2, 0).unwrap()] {
            let s = 2.5;
            let e1 = MultiIndex::unit(0);
            let lhs = base.derived(e1, s).unwrap().derived(e1, s - 1.0).unwrap();
            let rhs = base.derived(e1.add(&e1), s).unwrap();
            for xi in probes(2) {
                assert!(close(lhs.evaluate(&xi), rhs.evaluate(&xi), 1e-8));
            }
        }
    }

    #[test]
    fn finite_difference_matches_closed_form() {
        let closed = FrequencySymbol::riesz(2, 0).unwrap();
        let custom = FrequencySymbol::custom(2, "riesz-custom", Some(0.0), |xi| {
            Complex64::new(0.0, xi[0] / norm(xi))
        })
        .unwrap();
        for alpha in [MultiIndex([1, 0, 0]), MultiIndex([0, 2, 0]), MultiIndex([1, 1, 0])] {
            let a = closed.derived(alpha, 1.5).unwrap();
            let b = custom.derived(alpha, 1.5).unwrap();
            for xi in probes(2) {
                // zero-homogeneous symbols are O(1): compare on an absolute floor
                assert!((b.evaluate(&xi) - a.evaluate(&xi)).norm() <= 1e-6 * (1.0 + a.evaluate(&xi).norm()), "{alpha}");
            }
        }
    }

    #[test]
    fn metadata_checks() {
        assert!(FrequencySymbol::abs_pow(3, 0.5).unwrap().is_real());
        assert!(FrequencySymbol::riesz(1, 0).unwrap().is_real());
        assert!(FrequencySymbol::identity(1).unwrap().derived(MultiIndex::unit(0), 1.0).unwrap().is_real());
        let bad = FrequencySymbol::custom(1, "liar", Some(1.0), |xi| Complex64::new(xi[0] * xi[0], 0.0));
        assert!(matches!(bad, Err(Error::SymbolProperty { .. })));
        let nan = FrequencySymbol::custom(1, "nan", None, |_| Complex64::new(f64::NAN, 0.0));
        assert!(matches!(nan, Err(Error::SymbolNotFinite { .. })));
        assert!(FrequencySymbol::identity(2).unwrap().derived(MultiIndex([2, 1, 0]), 3.0).is_err());
    }

    #[test]
    fn parse_ids() {
        let m = FrequencySymbol::parse(2, "derived:riesz:1,0+1,2.5").unwrap();
        let direct = FrequencySymbol::riesz(2, 1).unwrap().derived(MultiIndex::unit(1), 2.5).unwrap();
        for xi in probes(2) {
            assert!(close(m.evaluate(&xi), direct.evaluate(&xi), 1e-14));
        }
        assert!(FrequencySymbol::parse(1, "abs_pow:0.5").is_ok());
        assert!(FrequencySymbol::parse(1, "nope").is_err());
    }
}
