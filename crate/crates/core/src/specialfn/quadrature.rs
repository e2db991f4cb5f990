use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Upper limit of the exponential substitution variable when the opposite
/// endpoint is at zero.
const MAX_EXP_T: f64 = 700.0;

/// Tolerances and budget for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self> {
        if !(abs_tol > 0.0) || !(rel_tol > 0.0) {
            return Err(Error::Domain(format!(
                "quadrature tolerances must be positive (abs {abs_tol}, rel {rel_tol})"
            )));
        }
        if max_subdivisions == 0 {
            return Err(Error::Domain(
                "quadrature needs at least one subdivision".into(),
            ));
        }
        Ok(QuadratureSpec {
            abs_tol,
            rel_tol,
            max_subdivisions,
        })
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_subdivisions: 2_000,
        }
    }
}

/// A real function on an open interval, with flags for endpoints where it
/// may be unbounded or non-smooth.
///
/// Flagged endpoints are handled by the substitution `x = b - (b-a)e^{-t}`
/// (right) or `x = a + (b-a)e^{-t}` (left) before subdivision; on `(0, 1)`
/// these are `u = 1 - e^{-t}` and `u = e^{-t}`. The integrand is never
/// evaluated at a flagged endpoint itself.
///
/// An integrand built with [`Integrand::with_complement`] receives both `x`
/// and `b - x`, the latter exact even where `x` has rounded to `b`. Such
/// integrands can be followed much closer to a singular right endpoint.
pub struct Integrand<F> {
    f: F,
    singular_left: bool,
    singular_right: bool,
}

/// Evaluation at `x` with `xc = b − x`.
pub trait Evaluate {
    fn evaluate(&self, x: f64, xc: f64) -> f64;
    fn uses_complement(&self) -> bool;
}

#[doc(hidden)]
pub struct Plain<G>(G);

#[doc(hidden)]
pub struct Complemented<G>(G);

impl<G: Fn(f64) -> f64> Evaluate for Plain<G> {
    #[inline]
    fn evaluate(&self, x: f64, _xc: f64) -> f64 {
        (self.0)(x)
    }
    fn uses_complement(&self) -> bool {
        false
    }
}

impl<G: Fn(f64, f64) -> f64> Evaluate for Complemented<G> {
    #[inline]
    fn evaluate(&self, x: f64, xc: f64) -> f64 {
        (self.0)(x, xc)
    }
    fn uses_complement(&self) -> bool {
        true
    }
}

impl<G: Fn(f64) -> f64> Integrand<Plain<G>> {
    pub fn new(f: G) -> Self {
        Integrand {
            f: Plain(f),
            singular_left: false,
            singular_right: false,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f.0)(x)
    }
}

impl<G: Fn(f64, f64) -> f64> Integrand<Complemented<G>> {
    /// `f(x, b − x)`.
    pub fn with_complement(f: G) -> Self {
        Integrand {
            f: Complemented(f),
            singular_left: false,
            singular_right: false,
        }
    }
}

impl<F> Integrand<F> {
    pub fn singular_left(mut self) -> Self {
        self.singular_left = true;
        self
    }

    pub fn singular_right(mut self) -> Self {
        self.singular_right = true;
        self
    }

    pub fn singular_both(self) -> Self {
        self.singular_left().singular_right()
    }
}

#[derive(Debug, Clone, Copy)]
enum Map {
    Identity,
    /// x = a + w e^{-t}
    Left {
        a: f64,
        w: f64,
    },
    /// x = b - w e^{-t}
    Right {
        b: f64,
        w: f64,
    },
}

impl Map {
    /// Mapped point, Jacobian, and distance from the point to `end`.
    #[inline]
    fn apply(&self, t: f64, end: f64) -> (f64, f64, f64) {
        match *self {
            Map::Identity => (t, 1.0, end - t),
            Map::Left { a, w } => {
                let s = w * (-t).exp();
                (a + s, s, end - (a + s))
            }
            Map::Right { b, w } => {
                let s = w * (-t).exp();
                (b - s, s, s)
            }
        }
    }
}

/// Largest `t` for which the mapped point stays distinct from `end`.
fn exp_range(width: f64, end: f64) -> f64 {
    if end == 0.0 {
        return MAX_EXP_T;
    }
    (width / (f64::EPSILON * end.abs()))
        .ln()
        .clamp(1.0, MAX_EXP_T)
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    seg: usize,
    t0: f64,
    t1: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.t0.total_cmp(&self.t0))
            .then_with(|| other.seg.cmp(&self.seg))
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut err = err.abs();
    if res_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / res_asc).powf(1.5);
        err = if scale < 1.0 {
            res_asc * scale
        } else {
            res_asc
        };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    err
}

fn kronrod15<G: Fn(f64) -> f64>(g: &G, t0: f64, t1: f64) -> (f64, f64) {
    let center = 0.5 * (t0 + t1);
    let half = 0.5 * (t1 - t0);
    let fc = g(center);
    let mut res_g = fc * WG[3];
    let mut res_k = fc * WGK[7];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = g(center - dx);
        let f2 = g(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let err = (res_k - res_g) * half;
    let h = half.abs();
    (res_k * half, rescale_error(err, res_abs * h, res_asc * h))
}

/// Adaptive Gauss–Kronrod (7/15) quadrature of `f` over `(a, b)`.
///
/// Panels are bisected in order of decreasing error estimate until the total
/// estimated error is within `max(abs_tol, rel_tol * |value|)`.
pub fn integrate<F: Evaluate>(
    f: &Integrand<F>,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Domain(format!(
            "integration interval must be finite with a < b, got ({a}, {b})"
        )));
    }
    QuadratureSpec::new(spec.abs_tol, spec.rel_tol, spec.max_subdivisions)?;

    let mid = a + 0.5 * (b - a);
    // with the exact complement available the right endpoint can be
    // approached as closely as the exponential allows
    let complement = f.f.uses_complement();
    let right_range = |w: f64| {
        if complement {
            MAX_EXP_T
        } else {
            exp_range(w, b)
        }
    };
    let segments: Vec<(Map, f64, f64)> = match (f.singular_left, f.singular_right) {
        (false, false) => vec![(Map::Identity, a, b)],
        (true, false) => vec![(Map::Left { a, w: b - a }, 0.0, exp_range(b - a, a))],
        (false, true) => vec![(Map::Right { b, w: b - a }, 0.0, right_range(b - a))],
        (true, true) => vec![
            (Map::Left { a, w: mid - a }, 0.0, exp_range(mid - a, a)),
            (Map::Right { b, w: b - mid }, 0.0, right_range(b - mid)),
        ],
    };

    let eval_panel = |seg: usize, t0: f64, t1: f64| -> Result<Panel> {
        let map = segments[seg].0;
        let g = |t: f64| {
            let (x, jac, xc) = map.apply(t, b);
            if jac == 0.0 {
                0.0
            } else {
                f.f.evaluate(x, xc) * jac
            }
        };
        let (value, error) = kronrod15(&g, t0, t1);
        if !value.is_finite() || !error.is_finite() {
            let (x0, _, _) = map.apply(t0, b);
            let (x1, _, _) = map.apply(t1, b);
            return Err(Error::Domain(format!(
                "integrand is not finite between {} and {}",
                x0.min(x1),
                x0.max(x1)
            )));
        }
        Ok(Panel {
            seg,
            t0,
            t1,
            value,
            error,
        })
    };

    let mut heap = BinaryHeap::new();
    for (i, &(map, t0, t1)) in segments.iter().enumerate() {
        if matches!(map, Map::Identity) {
            heap.push(eval_panel(i, t0, t1)?);
            continue;
        }
        // a single panel over a long exponential range puts no nodes near
        // t = 0, where most of the mass sits; start from panels of doubling
        // width instead
        let mut lo = t0;
        let mut hi = (t0 + 1.0).min(t1);
        loop {
            heap.push(eval_panel(i, lo, hi)?);
            if hi >= t1 {
                break;
            }
            lo = hi;
            hi = (2.0 * hi).min(t1);
        }
    }

    loop {
        let (total, total_err) = heap
            .iter()
            .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
        if total_err <= spec.abs_tol.max(spec.rel_tol * total.abs()) {
            return Ok(total);
        }
        let worst = heap.pop().expect("at least one panel");
        let tm = 0.5 * (worst.t0 + worst.t1);
        let too_narrow = !(tm > worst.t0 && tm < worst.t1)
            || (worst.t1 - worst.t0) <= 1e3 * f64::EPSILON * worst.t0.abs().max(worst.t1.abs());
        if heap.len() + 2 > spec.max_subdivisions || too_narrow {
            return Err(Error::Convergence {
                what: "adaptive quadrature".into(),
                estimate: total,
                error_bound: total_err,
            });
        }
        heap.push(eval_panel(worst.seg, worst.t0, tm)?);
        heap.push(eval_panel(worst.seg, tm, worst.t1)?);
    }
}
