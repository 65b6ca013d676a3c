use oscispline_core::modulus::ModulusContext;
use oscispline_core::oscillate::{oscillate_halfline, oscillate_segment, SolverOptions};
use oscispline_core::weights::{Domain, WeightFamily, WeightFunction};

fn exp_g(d: Domain) -> WeightFunction {
    WeightFunction::new(WeightFamily::ExpDecay { base: 0.0, amplitude: 1.0, rate: 1.0 }, d).unwrap()
}
fn one(d: Domain) -> WeightFunction {
    WeightFunction::new(WeightFamily::Constant(1.0), d).unwrap()
}

#[test]
fn smoke_r3_n3_both_domains() {
    let opts = SolverOptions::default();
    let f = one(Domain::Segment(5.0));
    let g = exp_g(Domain::Segment(5.0));
    let t0 = std::time::Instant::now();
    let seg = oscillate_segment(3, 3, 5.0, &f, &f, &g, &opts).unwrap();
    println!("segment r=3 n=3: C = {:.9}, resid {:.2e}, {:?}", seg.level, seg.diagnostics.equilibration_residual, t0.elapsed());
    let f = one(Domain::HalfLine);
    let g = exp_g(Domain::HalfLine);
    let t0 = std::time::Instant::now();
    let half = oscillate_halfline(3, 3, 1.0, &f, &f, &g, &opts).unwrap();
    println!("halfline r=3 n=3: C = {:.9}, resid {:.2e}, {:?}", half.level, half.diagnostics.equilibration_residual, t0.elapsed());
    assert_eq!(half.spline.knots().len(), 3);
}

#[test]
fn smoke_extreme_alpha_r2() {
    let f = one(Domain::HalfLine);
    let g = exp_g(Domain::HalfLine);
    let mut ctx = ModulusContext::new(2, &f, &f, &g, SolverOptions::default()).unwrap();
    let c0 = ctx.c0().unwrap().c0;
    let t0 = std::time::Instant::now();
    let hi = oscillate_halfline(2, 1, 1e4, &f, &f, &g, &SolverOptions::default()).unwrap();
    println!("C_1(1e4) = {:.9} vs C0 {:.9} ({:?})", hi.level, c0, t0.elapsed());
    assert!((hi.level - c0).abs() < 1e-3);
    let t0 = std::time::Instant::now();
    let lo1 = oscillate_halfline(2, 1, 1e-4, &f, &f, &g, &SolverOptions::default()).unwrap();
    let lo2 = oscillate_halfline(2, 2, 1e-4, &f, &f, &g, &SolverOptions::default()).unwrap();
    println!("C_1(1e-4) = {:.9}, C_2(1e-4) = {:.9} ({:?})", lo1.level, lo2.level, t0.elapsed());
    assert!((lo1.level - lo2.level).abs() < 1e-3);
}

#[test]
fn smoke_modulus_small_delta() {
    let f = one(Domain::HalfLine);
    let g = exp_g(Domain::HalfLine);
    let mut ctx = ModulusContext::new(2, &f, &f, &g, SolverOptions::default()).unwrap();
    for delta in [0.45, 0.35, 0.2, 0.1] {
        let t0 = std::time::Instant::now();
        let res = ctx.omega(1, delta).unwrap();
        println!(
            "omega(delta={delta}) = {:.9} (n = {:?}, alpha = {:?}, achieved {:?}, {:?})",
            res.omega_value, res.n, res.alpha, res.achieved_norm, t0.elapsed()
        );
        assert!((res.achieved_norm.unwrap() - delta).abs() < 1e-6);
    }
}
