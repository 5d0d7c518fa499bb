//! Normal distribution, Shapiro-Wilk test, empirical CDF and quantiles.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::scalar::Real;

// erfc: rational approximations from the FreeBSD msun library (s_erf.c).
const ERX: f64 = 8.45062911510467529297e-01;

const PP: [f64; 5] = [
    1.28379167095512558561e-01,
    -3.25042107247001499370e-01,
    -2.84817495755985104766e-02,
    -5.77027029648944159157e-03,
    -2.37630166566501626084e-05,
];
const QQ: [f64; 5] = [
    3.97917223959155352819e-01,
    6.50222499887672944485e-02,
    5.08130628187576562776e-03,
    1.32494738004321644526e-04,
    -3.96022827877536812320e-06,
];

const PA: [f64; 7] = [
    -2.36211856075265944077e-03,
    4.14856118683748331666e-01,
    -3.72207876035701323847e-01,
    3.18346619901161753674e-01,
    -1.10894694282396677476e-01,
    3.54783043256182359371e-02,
    -2.16637559486879084300e-03,
];
const QA: [f64; 6] = [
    1.06420880400844228286e-01,
    5.40397917702171048937e-01,
    7.18286544141962662868e-02,
    1.26171219808761642112e-01,
    1.36370839120290507362e-02,
    1.19844998467991074170e-02,
];

const RA: [f64; 8] = [
    -9.86494403484714822705e-03,
    -6.93858572707181764372e-01,
    -1.05586262253232909814e+01,
    -6.23753324503260060396e+01,
    -1.62396669462573470355e+02,
    -1.84605092906711035994e+02,
    -8.12874355063065934246e+01,
    -9.81432934416914548592e+00,
];
const SA: [f64; 8] = [
    1.96512716674392571292e+01,
    1.37657754143519042600e+02,
    4.34565877475229228821e+02,
    6.45387271733267880336e+02,
    4.29008140027567833386e+02,
    1.08635005541779435134e+02,
    6.57024977031928170135e+00,
    -6.04244152148580987438e-02,
];

const RB: [f64; 7] = [
    -9.86494292470009928597e-03,
    -7.99283237680523006574e-01,
    -1.77579549177547519889e+01,
    -1.60636384855821916062e+02,
    -6.37566443368389627722e+02,
    -1.02509513161107724954e+03,
    -4.83519191608651397019e+02,
];
const SB: [f64; 7] = [
    3.03380607434824582924e+01,
    3.25792512996573918826e+02,
    1.53672958608443695994e+03,
    3.19985821950859553908e+03,
    2.55305040643316442583e+03,
    4.74528541206955367215e+02,
    -2.24409524465858183362e+01,
];

/// `c[0] + c[1] x + c[2] x^2 + ...`
fn poly<T: Real>(c: &[f64], x: T) -> T {
    c.iter().rev().fold(T::zero(), |acc, &ci| acc * x + T::of(ci))
}

/// `1 + c[0] x + c[1] x^2 + ...`
fn poly1<T: Real>(c: &[f64], x: T) -> T {
    T::one() + x * poly(c, x)
}

/// Complementary error function.
pub fn erfc<T: Real>(x: T) -> T {
    if x.is_nan() {
        return x;
    }
    let one = T::one();
    let two = T::of(2.0);
    let neg = x < T::zero();
    let ax = x.abs();

    if ax < T::of(0.84375) {
        let temp = if ax < T::of(1.3877787807814457e-17) {
            ax
        } else {
            let z = ax * ax;
            let y = poly(&PP, z) / poly1(&QQ, z);
            if ax < T::of(0.25) {
                ax + ax * y
            } else {
                T::of(0.5) + (ax * y + (ax - T::of(0.5)))
            }
        };
        return if neg { one + temp } else { one - temp };
    }
    if ax < T::of(1.25) {
        let s = ax - one;
        let r = poly(&PA, s) / poly1(&QA, s);
        return if neg {
            one + T::of(ERX) + r
        } else {
            one - T::of(ERX) - r
        };
    }
    if ax >= T::of(28.0) {
        return if neg { two } else { T::zero() };
    }
    if neg && ax > T::of(6.0) {
        return two;
    }
    let s = one / (ax * ax);
    let (r, q) = if ax < T::of(1.0 / 0.35) {
        (poly(&RA, s), poly1(&SA, s))
    } else {
        (poly(&RB, s), poly1(&SB, s))
    };
    // z keeps few enough mantissa bits that z*z is exact
    let z = (ax * T::of(4096.0)).floor() / T::of(4096.0);
    let e = (-z * z - T::of(0.5625)).exp() * ((z - ax) * (z + ax) + r / q).exp();
    if neg {
        two - e / ax
    } else {
        e / ax
    }
}

/// Standard normal CDF.
pub fn normal_cdf<T: Real>(x: T) -> T {
    let c = T::of(0.5) * erfc(-x / T::of(std::f64::consts::SQRT_2));
    c.max(T::zero()).min(T::one())
}

/// Standard normal density.
pub fn normal_pdf<T: Real>(x: T) -> T {
    T::of(0.398_942_280_401_432_7) * (-T::of(0.5) * x * x).exp()
}

/// Starting value for the quantile: AS 111 (Beasley and Springer).
fn ppnd<T: Real>(p: T) -> T {
    const A: [f64; 4] = [2.50662823884, -18.61500062529, 41.39119773534, -25.44106049637];
    const B: [f64; 4] = [-8.47351093090, 23.08336743743, -21.06224101826, 3.13082909833];
    const C: [f64; 4] = [-2.78718931138, -2.29796479134, 4.85014127135, 2.32121276858];
    const D: [f64; 2] = [3.54388924762, 1.63706781897];

    let q = p - T::of(0.5);
    if q.abs() <= T::of(0.42) {
        let r = q * q;
        return q * poly(&A, r) / poly1(&B, r);
    }
    let tail = if q > T::zero() { T::one() - p } else { p };
    let r = (-tail.ln()).sqrt();
    let v = poly(&C, r) / poly1(&D, r);
    if q < T::zero() {
        -v
    } else {
        v
    }
}

/// Inverse standard normal CDF, refined by Newton steps on [`normal_cdf`].
pub fn normal_quantile<T: Real>(p: T) -> Result<T> {
    if !(p >= T::zero() && p <= T::one()) {
        return Err(Error::QuantileLevel(p.approx_f64()));
    }
    if p == T::zero() {
        return Ok(T::neg_infinity());
    }
    if p == T::one() {
        return Ok(T::infinity());
    }
    if p > T::of(0.5) {
        return normal_quantile(T::one() - p).map(|x| -x);
    }
    let mut x = ppnd(p);
    for _ in 0..3 {
        let d = normal_pdf(x);
        if d <= T::zero() {
            break;
        }
        x = x - (normal_cdf(x) - p) / d;
    }
    Ok(x)
}

/// Test statistic and p-value.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TestResult<T = f64> {
    pub statistic: T,
    pub p_value: T,
}

/// Shapiro-Wilk W test with Royston's (1995) approximation of the null
/// distribution.
pub fn shapiro_wilk<T: Real>(sample: &[T]) -> Result<TestResult<T>> {
    const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056];
    const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
    const C3: [f64; 4] = [0.5440, -0.39978, 0.025054, -6.714e-4];
    const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
    const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
    const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
    const G: [f64; 2] = [-2.273, 0.459];

    let n = sample.len();
    if !(3..=5000).contains(&n) {
        return Err(Error::SampleSize(n));
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("sample contains a non-finite value".into()));
    }
    let mut x = sample.to_vec();
    x.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));

    let nf = T::of_usize(n);
    let half = n / 2;
    let two = T::of(2.0);

    // a[i] pairs with x[n-1-i] (positive) and x[i] (negative)
    let mut a = vec![T::zero(); half];
    if n == 3 {
        a[0] = T::of(std::f64::consts::FRAC_1_SQRT_2);
    } else {
        let an25 = nf + T::of(0.25);
        let mut m = Vec::with_capacity(half);
        for i in 0..half {
            let p = (T::of_usize(i + 1) - T::of(0.375)) / an25;
            m.push(-normal_quantile(p)?);
        }
        let summ2 = two * m.iter().fold(T::zero(), |acc, &v| acc + v * v);
        let ssumm2 = summ2.sqrt();
        let rsn = T::one() / nf.sqrt();
        let a1 = poly(&C1, rsn) + m[0] / ssumm2;
        if n > 5 {
            let a2 = poly(&C2, rsn) + m[1] / ssumm2;
            let fac = ((summ2 - two * (m[0] * m[0] + m[1] * m[1]))
                / (T::one() - two * (a1 * a1 + a2 * a2)))
                .sqrt();
            a[0] = a1;
            a[1] = a2;
            for i in 2..half {
                a[i] = m[i] / fac;
            }
        } else {
            let fac = ((summ2 - two * m[0] * m[0]) / (T::one() - two * a1 * a1)).sqrt();
            a[0] = a1;
            for i in 1..half {
                a[i] = m[i] / fac;
            }
        }
    }

    let range = x[n - 1] - x[0];
    if !(range > T::zero()) {
        return Err(Error::ZeroVariance);
    }
    let coef = |i: usize| -> T {
        if n % 2 == 1 && i == half {
            T::zero()
        } else if i < half {
            -a[i]
        } else {
            a[n - 1 - i]
        }
    };

    let xs: Vec<T> = x.iter().map(|&v| v / range).collect();
    let mean_x = xs.iter().fold(T::zero(), |acc, &v| acc + v) / nf;
    let mean_a = (0..n).fold(T::zero(), |acc, i| acc + coef(i)) / nf;
    let (mut ssa, mut ssx, mut sax) = (T::zero(), T::zero(), T::zero());
    for (i, &xi) in xs.iter().enumerate() {
        let da = coef(i) - mean_a;
        let dx = xi - mean_x;
        ssa = ssa + da * da;
        ssx = ssx + dx * dx;
        sax = sax + da * dx;
    }
    if !(ssx > T::zero()) {
        return Err(Error::ZeroVariance);
    }
    let root = (ssa * ssx).sqrt();
    let w1 = (root - sax) * (root + sax) / (ssa * ssx);
    let w = T::one() - w1;

    let p = if n == 3 {
        let pi6 = T::of(6.0 / std::f64::consts::PI);
        let p = pi6 * (w.sqrt().asin() - T::of(std::f64::consts::FRAC_PI_3));
        p.max(T::zero())
    } else {
        let y = w1.ln();
        if n <= 11 {
            let gamma = poly(&G, nf);
            if y >= gamma {
                T::of(1e-19)
            } else {
                let y = -(gamma - y).ln();
                let m = poly(&C3, nf);
                let s = poly(&C4, nf).exp();
                upper_tail((y - m) / s)
            }
        } else {
            let ln_n = nf.ln();
            let m = poly(&C5, ln_n);
            let s = poly(&C6, ln_n).exp();
            upper_tail((y - m) / s)
        }
    };

    Ok(TestResult {
        statistic: w,
        p_value: p.max(T::zero()).min(T::one()),
    })
}

fn upper_tail<T: Real>(z: T) -> T {
    normal_cdf(-z)
}

/// Right-continuous step function `F(x) = #{v <= x} / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf<T = f64> {
    sorted: Vec<T>,
}

impl<T: Real> EmpiricalCdf<T> {
    pub fn new(values: &[T]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty);
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidArgument("NaN in ECDF sample".into()));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        Ok(Self { sorted })
    }

    pub fn eval(&self, x: T) -> T {
        let count = self.sorted.partition_point(|&v| v <= x);
        T::of_usize(count) / T::of_usize(self.sorted.len())
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Sample values in ascending order; the jump points of the function.
    pub fn support(&self) -> &[T] {
        &self.sorted
    }
}

pub fn empirical_cdf<T: Real>(values: &[T]) -> Result<EmpiricalCdf<T>> {
    EmpiricalCdf::new(values)
}

/// Sample quantile with linear interpolation between order statistics
/// (Hyndman-Fan type 7).
pub fn quantile<T: Real>(values: &[T], q: T) -> Result<T> {
    if values.is_empty() {
        return Err(Error::Empty);
    }
    if !(q >= T::zero() && q <= T::one()) {
        return Err(Error::QuantileLevel(q.approx_f64()));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument("NaN in quantile sample".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    Ok(quantile_sorted(&sorted, q))
}

fn quantile_sorted<T: Real>(sorted: &[T], q: T) -> T {
    let h = T::of_usize(sorted.len() - 1) * q;
    let lo = h.floor();
    let i = lo.to_usize().unwrap_or(0).min(sorted.len() - 1);
    if i + 1 >= sorted.len() {
        return sorted[i];
    }
    let frac = h - lo;
    let (a, b) = (sorted[i], sorted[i + 1]);
    if a == b {
        a
    } else {
        a + frac * (b - a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // reference values from mpmath at 50 digits
    const CDF_REF: [(f64, f64); 16] = [
        (-38.0, 2.885428351e-316),
        (-20.0, 2.753624118606234e-89),
        (-8.0, 6.220960574271784e-16),
        (-5.0, 2.866515718791939e-7),
        (-3.0, 0.001349898031630095),
        (-1.959964, 0.024999999096442),
        (-1.0, 0.15865525393145705),
        (-0.5, 0.3085375387259869),
        (-0.001, 0.4996010577860889),
        (0.25, 0.5987063256829237),
        (0.7, 0.758036347776927),
        (1.959964, 0.9750000009035576),
        (2.5, 0.9937903346742239),
        (4.0, 0.9999683287581669),
        (6.0, 0.9999999990134124),
        (8.0, 0.9999999999999994),
    ];

    #[test]
    fn normal_cdf_reference_values() {
        for &(x, want) in &CDF_REF {
            let got = normal_cdf(x);
            assert!((got - want).abs() <= 1e-15, "x = {x}: {got} vs {want}");
            if (1e-300..0.5).contains(&want) {
                assert!(((got - want) / want).abs() < 1e-9, "relative at x = {x}");
            }
        }
        assert_eq!(normal_cdf(0.0), 0.5);
        let far = normal_cdf(-40.0);
        assert!((0.0..=1e-300).contains(&far));
        assert_eq!(normal_cdf(40.0), 1.0);
    }

    #[test]
    fn normal_cdf_f32() {
        assert!((normal_cdf(1.959964f32) - 0.975).abs() < 1e-6);
    }

    #[test]
    fn erfc_limits() {
        assert_eq!(erfc(0.0), 1.0);
        assert_eq!(erfc(f64::INFINITY), 0.0);
        assert_eq!(erfc(f64::NEG_INFINITY), 2.0);
        assert!(erfc(f64::NAN).is_nan());
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[1e-12, 1e-6, 0.001, 0.025, 0.2, 0.5, 0.7, 0.975, 0.999999] {
            let x: f64 = normal_quantile(p).unwrap();
            let back = normal_cdf(x);
            assert!((back - p).abs() <= 1e-14 * p.max(1e-2), "p = {p}");
        }
        assert!((normal_quantile(0.975f64).unwrap() - 1.959963984540054).abs() < 1e-12);
        assert_eq!(normal_quantile(0.0).unwrap(), f64::NEG_INFINITY);
        assert!(normal_quantile(1.5).is_err());
    }

    #[test]
    fn shapiro_wilk_rejects_bad_input() {
        assert_eq!(shapiro_wilk(&[1.0, 2.0]), Err(Error::SampleSize(2)));
        assert_eq!(shapiro_wilk(&[3.0; 10]), Err(Error::ZeroVariance));
        assert_eq!(shapiro_wilk(&vec![0.0; 5001]), Err(Error::SampleSize(5001)));
    }

    #[test]
    fn shapiro_wilk_three_points() {
        let r = shapiro_wilk(&[2.1f64, 3.7, 3.9]).unwrap();
        assert!((r.statistic - 0.8321917808219178).abs() < 1e-12);
        assert!((r.p_value - 0.1939175214814527).abs() < 1e-6);
        let eq = shapiro_wilk(&[0.0f64, 1.0, 2.0]).unwrap();
        assert!((eq.statistic - 1.0).abs() < 1e-14);
        assert!((eq.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ecdf_steps() {
        let f = empirical_cdf(&[1.0f64, 2.0, 3.0]).unwrap();
        assert!((f.eval(2.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(f.eval(0.5), 0.0);
        assert_eq!(f.eval(f64::INFINITY), 1.0);
        let single = empirical_cdf(&[4.0]).unwrap();
        assert_eq!(single.eval(4.0 - 1e-12), 0.0);
        assert_eq!(single.eval(4.0), 1.0);
        assert_eq!(empirical_cdf::<f64>(&[]), Err(Error::Empty));
    }

    #[test]
    fn type7_quantiles() {
        let v = [4.0f64, 1.0, 3.0, 2.0];
        assert_eq!(quantile(&v, 0.0).unwrap(), 1.0);
        assert_eq!(quantile(&v, 1.0).unwrap(), 4.0);
        assert!((quantile(&v, 0.25).unwrap() - 1.75).abs() < 1e-15);
        assert_eq!(quantile(&[2.5; 7], 0.3).unwrap(), 2.5);
        assert_eq!(quantile::<f64>(&[], 0.5), Err(Error::Empty));
        assert_eq!(quantile(&v, 1.5), Err(Error::QuantileLevel(1.5)));
    }
}
