//! Dense complex matrix helpers shared by the operator constructors.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Maximum column absolute-sum norm.
pub fn one_norm(a: &DMatrix<Complex64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..a.ncols() {
        let s: f64 = a.column(j).iter().map(|x| x.norm()).sum();
        best = best.max(s);
    }
    best
}

/// Largest elementwise absolute difference.
pub fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).map(|x| x.norm()).max()
}

const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.539398330063230e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068;
const THETA_13: f64 = 5.371920351148152;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Matrix exponential by Pade approximation with scaling and squaring.
pub fn expm(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    assert_eq!(a.nrows(), a.ncols(), "expm needs a square matrix");
    let norm = one_norm(a);
    if norm <= THETA_9 {
        let order = if norm <= THETA_3 {
            3
        } else if norm <= THETA_5 {
            5
        } else if norm <= THETA_7 {
            7
        } else {
            9
        };
        return pade_low(a, order);
    }
    let s = ((norm / THETA_13).log2().ceil() as i32).max(0);
    let scaled = a.map(|x| x / re(2f64.powi(s)));
    let mut f = pade_13(&scaled);
    for _ in 0..s {
        f = &f * &f;
    }
    f
}

fn pade_low(a: &DMatrix<Complex64>, order: usize) -> DMatrix<Complex64> {
    let b: &[f64] = match order {
        3 => &B3,
        5 => &B5,
        7 => &B7,
        _ => &B9,
    };
    let n = a.nrows();
    let id = DMatrix::<Complex64>::identity(n, n);
    let a2 = a * a;
    // U = A (b1 I + b3 A^2 + ...), V = b0 I + b2 A^2 + ...
    let mut u_poly = id.map(|x| re(b[1]) * x);
    let mut v = id.map(|x| re(b[0]) * x);
    let mut pow = id.clone();
    for k in (2..=order).step_by(2) {
        pow = &pow * &a2;
        u_poly += pow.map(|x| re(b[k + 1]) * x);
        v += pow.map(|x| re(b[k]) * x);
    }
    let u = a * u_poly;
    solve_pade(u, v)
}

fn pade_13(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let b = &B13;
    let n = a.nrows();
    let id = DMatrix::<Complex64>::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let w1 = a6.map(|x| re(b[13]) * x) + a4.map(|x| re(b[11]) * x) + a2.map(|x| re(b[9]) * x);
    let w2 = a6.map(|x| re(b[7]) * x)
        + a4.map(|x| re(b[5]) * x)
        + a2.map(|x| re(b[3]) * x)
        + id.map(|x| re(b[1]) * x);
    let u = a * (&a6 * w1 + w2);
    let z1 = a6.map(|x| re(b[12]) * x) + a4.map(|x| re(b[10]) * x) + a2.map(|x| re(b[8]) * x);
    let z2 = a6.map(|x| re(b[6]) * x)
        + a4.map(|x| re(b[4]) * x)
        + a2.map(|x| re(b[2]) * x)
        + id.map(|x| re(b[0]) * x);
    let v = &a6 * z1 + z2;
    solve_pade(u, v)
}

fn solve_pade(u: DMatrix<Complex64>, v: DMatrix<Complex64>) -> DMatrix<Complex64> {
    let lhs = &v - &u;
    let rhs = &v + &u;
    lhs.lu()
        .solve(&rhs)
        .expect("Pade denominator is singular; matrix norm out of range")
}
