mod common;

use std::rc::Rc;

use common::*;
use mz_euler::rom::{self, Ansatz, RomConfig, RomOperator};
use mz_euler::spectral::{make_wavegrid, taylor_green, SpectralField, WaveGrid};
use num_complex::Complex64 as C;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const R1: &str = "Dk(u,T)";
const R2: &str = "Dk(u,Dt(H-T,u))-Dk(T,T)";
const R3: &str = "Dk(u,Dt(u,Dh(u,H-2T)+Dt(u,T-2H))+Dt(T,T-H)+Dt(H,H))+3Dk(T,Dt(u,T-H))";
const R4: &str = "Dk(u,Dt(u,Dh(H,H-2T)+3Dh(T,T)+Dt(H,2T-3H)-Dt(T,T)+Dh(u,Dh(u,H-3T)+Dt(u,3T-5H))\
+Dt(u,Dh(u,5T-3H)+Dt(u,3H-T)))+Dt(H,Dh(u,3H-5T)+Dt(u,T-3H))+Dt(T,Dh(u,3T-H)+Dt(u,5H-3T)))\
-4Dk(T,Dt(H,H-T)+Dt(T,T)+Dt(u,Dh(u,H-2T)+Dt(u,T-2H)))-3Dk(Dt(u,H),Dt(u,H-2T))-3Dk(Dt(u,T),Dt(u,T))";

fn resolved_field(n: usize, seed: u64) -> SpectralField {
    let grid = make_wavegrid(2 * n as i64, Some(n as i64)).unwrap();
    random_field(grid, n, seed)
}

/// Evaluates the nested `D` expressions above by brute-force triad sums.
struct Composer {
    n: usize,
    u: SpectralField,
    h: SpectralField,
    t: SpectralField,
}

impl Composer {
    fn new(u: &SpectralField) -> Self {
        let n = u.grid().resolved_half_width().unwrap();
        let c = direct_c(u, u);
        Self {
            n,
            u: u.clone(),
            h: restrict(&c, n, true),
            t: restrict(&c, n, false),
        }
    }

    fn eval(&self, src: &str) -> SpectralField {
        let bytes: Vec<u8> = src.bytes().filter(|b| !b.is_ascii_whitespace()).collect();
        let mut pos = 0;
        let out = self.expr(&bytes, &mut pos);
        assert_eq!(pos, bytes.len(), "trailing input in {src}");
        out
    }

    fn expr(&self, s: &[u8], pos: &mut usize) -> SpectralField {
        let mut acc = SpectralField::zeros(*self.u.grid());
        let mut sign = 1.0;
        if s[*pos] == b'-' {
            sign = -1.0;
            *pos += 1;
        }
        loop {
            let mut coef = 0.0;
            let mut digits = false;
            while s[*pos].is_ascii_digit() {
                coef = coef * 10.0 + (s[*pos] - b'0') as f64;
                *pos += 1;
                digits = true;
            }
            if !digits {
                coef = 1.0;
            }
            let atom = self.atom(s, pos);
            acc.add_scaled(sign * coef, &atom);
            match s.get(*pos) {
                Some(b'+') => sign = 1.0,
                Some(b'-') => sign = -1.0,
                _ => return acc,
            }
            *pos += 1;
        }
    }

    fn atom(&self, s: &[u8], pos: &mut usize) -> SpectralField {
        let c = s[*pos];
        *pos += 1;
        match c {
            b'u' => self.u.clone(),
            b'H' => self.h.clone(),
            b'T' => self.t.clone(),
            b'D' => {
                let kind = s[*pos];
                *pos += 1;
                assert_eq!(s[*pos], b'(');
                *pos += 1;
                let a = self.expr(s, pos);
                assert_eq!(s[*pos], b',');
                *pos += 1;
                let b = self.expr(s, pos);
                assert_eq!(s[*pos], b')');
                *pos += 1;
                let d = direct_d(&a, &b);
                match kind {
                    b'h' | b'k' => restrict(&d, self.n, true),
                    b't' => restrict(&d, self.n, false),
                    other => panic!("unknown restriction {}", other as char),
                }
            }
            other => panic!("unexpected {}", other as char),
        }
    }
}

#[test]
fn terms_match_composition_oracle() {
    for seed in [1, 2] {
        let u = resolved_field(2, seed);
        let oracle = Composer::new(&u);
        let terms = RomOperator::for_field(&u).unwrap().terms(&u, 4).unwrap();
        assert!(rel_err(&terms[0], &oracle.h) <= 1e-12);
        for (i, src) in [R1, R2, R3, R4].iter().enumerate() {
            let expect = oracle.eval(src);
            assert!(max_abs(&expect) > 1e-3, "oracle R{} vanished", i + 1);
            let err = rel_err(&terms[i + 1], &expect);
            assert!(err <= 1e-12, "R{} relative error {err:e}", i + 1);
        }
    }
}

#[test]
fn markov_term_matches_direct_sum() {
    let u = resolved_field(2, 7);
    let expect = restrict(&direct_c(&u, &u), 2, true);
    assert!(rel_err(&rom::markov_term(&u).unwrap(), &expect) <= 1e-12);
}

type Func = Rc<dyn Fn(&SpectralField) -> SpectralField>;

/// Functions of the full state together with their polynomial degree.
#[derive(Clone)]
struct Poly {
    f: Func,
    degree: usize,
}

/// The Liouvillian, projector and complement acting on polynomial functions of
/// the full state of a small system whose dynamics is `du/dt = C(u, u)`.
struct Liouville {
    n: usize,
}

impl Liouville {
    // the transform-based convolution is checked against direct sums elsewhere
    fn rhs(u: &SpectralField) -> SpectralField {
        mz_euler::spectral::convolve(u, u).unwrap()
    }

    /// `(L g)(x) = g'(x)[R(x)]`, the derivative extracted exactly by averaging
    /// over `max(degree, 2)` roots of unity.
    fn l(&self, g: &Poly) -> Poly {
        let inner = g.f.clone();
        let k = g.degree.max(2);
        Poly {
            degree: g.degree + 1,
            f: Rc::new(move |x: &SpectralField| {
                let v = Self::rhs(x);
                let (nx, nv) = (max_abs(x), max_abs(&v));
                let mut out = SpectralField::zeros(*x.grid());
                if nv == 0.0 {
                    return out;
                }
                let s = if nx > 0.0 { nx / nv } else { 1.0 };
                for j in 0..k {
                    let w = C::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / k as f64);
                    let mut p = x.clone();
                    p.coeffs_mut().iter_mut().zip(v.coeffs()).for_each(|(a, b)| *a += b * w * s);
                    let gp = inner(&p);
                    let scale = w.conj() / (k as f64 * s);
                    out.coeffs_mut().iter_mut().zip(gp.coeffs()).for_each(|(a, b)| *a += b * scale);
                }
                out
            }),
        }
    }

    fn p(&self, g: &Poly) -> Poly {
        let inner = g.f.clone();
        let n = self.n;
        Poly {
            degree: g.degree,
            f: Rc::new(move |x| inner(&restrict(x, n, true))),
        }
    }

    fn q(&self, g: &Poly) -> Poly {
        let pg = self.p(g);
        lin(&[(1.0, g.clone()), (-1.0, pg)])
    }

    /// Apply a word such as `"PLQL"` (rightmost operator first).
    fn word(&self, w: &str, g: &Poly) -> Poly {
        let mut out = g.clone();
        for op in w.chars().rev() {
            out = match op {
                'L' => self.l(&out),
                'P' => self.p(&out),
                'Q' => self.q(&out),
                other => panic!("unknown operator {other}"),
            };
        }
        out
    }

    /// `PL [Σ c_w W_w] QL` applied to the resolved coordinate function.
    fn term(&self, words: &[(f64, &str)]) -> Poly {
        let n = self.n;
        let coord = Poly {
            degree: 1,
            f: Rc::new(move |x| restrict(x, n, true)),
        };
        let ql = self.word("QL", &coord);
        let sum = lin(&words.iter().map(|&(c, w)| (c, self.word(w, &ql))).collect::<Vec<_>>());
        self.word("PL", &sum)
    }
}

fn lin(parts: &[(f64, Poly)]) -> Poly {
    let degree = parts.iter().map(|(_, p)| p.degree).max().unwrap_or(0);
    let parts: Vec<(f64, Func)> = parts.iter().map(|(c, p)| (*c, p.f.clone())).collect();
    Poly {
        degree,
        f: Rc::new(move |x| {
            let mut out = SpectralField::zeros(*x.grid());
            for (c, f) in &parts {
                out.add_scaled(*c, &f(x));
            }
            out
        }),
    }
}

fn liouville_terms() -> Vec<Vec<(f64, &'static str)>> {
    vec![
        vec![(1.0, "")],
        vec![(1.0, "PL"), (-1.0, "QL")],
        vec![(1.0, "PLPL"), (-2.0, "PLQL"), (-2.0, "QLPL"), (1.0, "QLQL")],
        vec![
            (1.0, "PLPLPL"),
            (-3.0, "PLPLQL"),
            (-5.0, "PLQLPL"),
            (-3.0, "QLPLPL"),
            (3.0, "PLQLQL"),
            (5.0, "QLPLQL"),
            (3.0, "QLQLPL"),
            (-1.0, "QLQLQL"),
        ],
    ]
}

#[test]
fn terms_match_liouvillian_expansion() {
    // Both sides are polynomial identities in the coefficients, so a general
    // complex field on F exercises them fully.
    let n = 2;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let u = SpectralField::from_fn(working(n), |k| {
        if k.iter().all(|&c| (-2..2).contains(&c)) {
            std::array::from_fn(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        } else {
            [C::new(0.0, 0.0); 3]
        }
    });
    let u = mz_euler::spectral::project_incompressible(&u);
    let lv = Liouville { n };
    let terms = RomOperator::for_field(&u).unwrap().terms(&u, 4).unwrap();
    for (i, words) in liouville_terms().into_iter().enumerate() {
        let poly = lv.term(&words);
        let expect = (poly.f)(&u);
        let err = rel_err(&terms[i + 1], &expect);
        assert!(max_abs(&expect) > 1e-6);
        assert!(err <= 1e-8, "R{} differs from its operator form: {err:e}", i + 1);
    }
}

fn check_homogeneity(u: &SpectralField, lambda: f64, tol: f64) {
    let mut op = RomOperator::for_field(u).unwrap();
    let base = op.terms(u, 4).unwrap();
    let scaled = op.terms(&u.clone().scaled(lambda), 4).unwrap();
    for (i, (a, b)) in scaled.iter().zip(&base).enumerate() {
        let expect = b.clone().scaled(lambda.powi(i as i32 + 2));
        let err = rel_err(a, &expect);
        assert!(err <= tol, "R{i} at lambda {lambda}: {err:e}");
    }
}

#[test]
fn terms_are_homogeneous() {
    let u = resolved_field(2, 3);
    for lambda in [2.0, -1.0, 0.5] {
        check_homogeneity(&u, lambda, 1e-11);
    }
}

#[test]
fn outputs_are_supported_and_solenoidal() {
    let u = resolved_field(2, 5);
    let terms = RomOperator::for_field(&u).unwrap().terms(&u, 4).unwrap();
    for (i, r) in terms.iter().enumerate() {
        let outside = restrict(r, 2, false);
        assert_eq!(max_abs(&outside), 0.0, "R{i} leaks outside F");
        let scale = r.max_abs().max(1.0);
        if i == 0 {
            let on_f = r.embed(make_wavegrid(2, Some(2)).unwrap());
            assert!(on_f.reality_defect() <= 1e-12 * scale, "R0 reality {}", on_f.reality_defect());
        }
        assert!(r.divergence_defect() <= 1e-12 * scale, "R{i} divergence");
    }
}

#[test]
fn compact_and_working_inputs_agree() {
    let u = resolved_field(2, 9);
    let mut op = RomOperator::new(2).unwrap();
    let compact = u.embed(op.compact_grid());
    let a = op.terms(&u, 4).unwrap();
    let b = op.terms(&compact, 4).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.embed(op.compact_grid()).coeffs(), y.coeffs());
    }
}

#[test]
fn zero_input_gives_zero_terms() {
    let grid = make_wavegrid(4, Some(2)).unwrap();
    let z = SpectralField::zeros(grid);
    for r in RomOperator::new(2).unwrap().terms(&z, 4).unwrap() {
        assert_eq!(r.max_abs(), 0.0);
    }
}

#[test]
fn support_violation_is_rejected() {
    let mut u = resolved_field(2, 1);
    u.set([3, 0, 0], [C::new(1e-3, 0.0); 3]);
    assert!(matches!(rom::t_model_term(&u), Err(mz_euler::Error::SupportViolation { .. })));
}

fn tg_resolved(n: usize) -> SpectralField {
    let grid = make_wavegrid(2 * n as i64, Some(n as i64)).unwrap();
    taylor_green(grid).unwrap()
}

#[test]
fn markov_term_conserves_resolved_energy() {
    let tg = tg_resolved(2);
    let r0 = rom::markov_term(&tg).unwrap();
    assert!(flux(&r0, &tg).abs() <= 1e-12);
    let u = resolved_field(2, 4);
    let r0 = rom::markov_term(&u).unwrap();
    assert!(flux(&r0, &u).abs() <= 1e-12 * u.energy() * r0.max_abs().max(1.0));
}

#[test]
fn t_model_drains_taylor_green() {
    let tg = tg_resolved(2);
    let r1 = rom::t_model_term(&tg).unwrap();
    assert!(r1.max_abs() > 1e-6);
    assert!(flux(&r1, &tg) <= 0.0);
}

#[test]
fn t_model_vanishes_when_products_stay_resolved() {
    // a single shear mode pair: C(u, u) has no triads leaving F
    let grid = make_wavegrid(8, Some(4)).unwrap();
    let mut u = SpectralField::zeros(grid);
    u.set([1, 0, 0], [C::new(0.0, 0.0), C::new(0.5, 0.0), C::new(0.0, 0.0)]);
    u.set([-1, 0, 0], [C::new(0.0, 0.0), C::new(0.5, 0.0), C::new(0.0, 0.0)]);
    assert!(rom::t_model_term(&u).unwrap().max_abs() <= 1e-15);
}

#[test]
fn individual_term_functions_agree_with_operator() {
    let u = resolved_field(2, 13);
    let all = RomOperator::for_field(&u).unwrap().terms(&u, 4).unwrap();
    let single = [
        rom::markov_term(&u).unwrap(),
        rom::t_model_term(&u).unwrap(),
        rom::second_order_term(&u).unwrap(),
        rom::third_order_term(&u).unwrap(),
        rom::fourth_order_term(&u).unwrap(),
    ];
    for (a, b) in all.iter().zip(&single) {
        assert!(rel_err(b, a) <= 1e-14);
    }
}

fn weighted(terms: &[SpectralField], weights: &[f64]) -> SpectralField {
    let mut out = terms[0].clone();
    for (r, w) in terms[1..].iter().zip(weights) {
        out.add_scaled(*w, r);
    }
    out
}

#[test]
fn renormalized_rhs_combines_terms() {
    let u = resolved_field(2, 17);
    let terms = RomOperator::for_field(&u).unwrap().terms(&u, 4).unwrap();

    let markov = rom::renormalized_rhs(&u, 3.0, &RomConfig::markov(2)).unwrap();
    assert!(rel_err(&markov, &terms[0]) <= 1e-14);

    let a = vec![0.3, -0.2, 0.1, -0.05];
    let cfg = RomConfig::new(2, 4, Ansatz::Algebraic, a.clone()).unwrap();
    let early = rom::renormalized_rhs(&u, 0.0, &cfg).unwrap();
    let late = rom::renormalized_rhs(&u, 7.5, &cfg).unwrap();
    assert_eq!(early.coeffs(), late.coeffs());
    assert!(rel_err(&early, &weighted(&terms, &a)) <= 1e-12);

    let cfg = RomConfig::new(2, 4, Ansatz::Constant, a.clone()).unwrap();
    let at_zero = rom::renormalized_rhs(&u, 0.0, &cfg).unwrap();
    assert!(rel_err(&at_zero, &terms[0]) <= 1e-14);
    let t: f64 = 1.7;
    let w: Vec<f64> = a.iter().zip(1..).map(|(c, i)| c * t.powi(i)).collect();
    let at_t = rom::renormalized_rhs(&u, t, &cfg).unwrap();
    assert!(rel_err(&at_t, &weighted(&terms, &w)) <= 1e-12);

    for order in 1..=3 {
        let cfg = RomConfig::new(2, order, Ansatz::Algebraic, a[..order].to_vec()).unwrap();
        let r = rom::renormalized_rhs(&u, 1.0, &cfg).unwrap();
        assert!(rel_err(&r, &weighted(&terms[..=order], &a[..order])) <= 1e-12);
    }
}

#[test]
fn renormalized_rhs_rejects_bad_input() {
    let u = resolved_field(2, 1);
    let cfg = RomConfig::new(2, 1, Ansatz::Algebraic, vec![0.1]).unwrap();
    assert!(matches!(rom::renormalized_rhs(&u, -1.0, &cfg), Err(mz_euler::Error::NegativeTime(_))));
    assert!(RomConfig::new(2, 2, Ansatz::Algebraic, vec![0.1]).is_err());
    assert!(RomConfig::new(2, 5, Ansatz::Algebraic, vec![0.1; 5]).is_err());
    let bad = RomConfig {
        resolved_half_width: 2,
        order: 2,
        ansatz: Ansatz::Constant,
        coeffs: vec![1.0],
    };
    assert!(rom::renormalized_rhs(&u, 1.0, &bad).is_err());
}

#[test]
fn ansatz_parses() {
    assert_eq!("algebraic".parse::<Ansatz>().unwrap(), Ansatz::Algebraic);
    assert_eq!("constant".parse::<Ansatz>().unwrap(), Ansatz::Constant);
    assert!("linear".parse::<Ansatz>().is_err());
    assert_eq!(Ansatz::Constant.to_string(), "constant");
}

fn working(n: usize) -> WaveGrid {
    make_wavegrid(2 * n as i64, Some(n as i64)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn homogeneity_holds_for_any_scale(seed in 0u64..1000, lambda in prop_oneof![-3.0f64..-0.25, 0.25f64..3.0]) {
        let u = random_field(working(2), 2, seed);
        check_homogeneity(&u, lambda, 1e-11);
    }

    #[test]
    fn markov_flux_vanishes(seed in 0u64..1000, n in 1usize..=3) {
        let u = random_field(working(n), n, seed);
        let r0 = rom::markov_term(&u).unwrap();
        prop_assert!(flux(&r0, &u).abs() <= 1e-12 * u.energy() * r0.max_abs().max(1.0));
    }

    #[test]
    fn terms_stay_solenoidal_and_resolved(seed in 0u64..1000) {
        let u = random_field(working(2), 2, seed);
        let terms = RomOperator::new(2).unwrap().terms(&u, 4).unwrap();
        let on_f = terms[0].embed(make_wavegrid(2, Some(2)).unwrap());
        prop_assert!(on_f.reality_defect() <= 1e-12 * on_f.max_abs().max(1.0));
        for r in terms {
            let scale = r.max_abs().max(1.0);
            prop_assert!(r.divergence_defect() <= 1e-12 * scale);
            prop_assert_eq!(max_abs(&restrict(&r, 2, false)), 0.0);
        }
    }
}
