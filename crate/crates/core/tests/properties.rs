use codesign_core::design_space::{
    canonicalize, decode16, decode19, encode16, encode19, ArchEncoding, BackboneSpec, CodesignPoint, HwConfig,
    HwDomain, Ratio,
};
use codesign_core::explorer::{run_ga, FitnessWeights, GaConfig, OraclePredictors, Preset};
use codesign_core::gp::{GpModel, Hyperparameters, KernelFamily, Standardizer};
use codesign_core::linalg::Matrix;
use codesign_core::oracle::{synthetic_ce, Oracle, OracleConfig};
use codesign_core::pareto::{front_indices, Objectives};
use proptest::prelude::*;

fn resnet() -> BackboneSpec {
    BackboneSpec::resnet50()
}

fn raw_cells(n: usize) -> impl Strategy<Value = Vec<Ratio>> {
    prop::collection::vec(prop::sample::select(Ratio::ALL.to_vec()), n)
}

fn arch() -> impl Strategy<Value = ArchEncoding> {
    raw_cells(16).prop_map(|raw| canonicalize(&raw, &resnet()).unwrap())
}

fn hw() -> impl Strategy<Value = HwConfig> {
    let d = HwDomain::default();
    (
        prop::sample::select(d.pf.clone()),
        prop::sample::select(d.pc.clone()),
        prop::sample::select(d.pv.clone()),
        prop::sample::select(d.bw.clone()),
    )
        .prop_map(|(pf, pc, pv, bw)| HwConfig { pf, pc, pv, bw, mem: 4 << 20 })
}

fn objectives(max: u32) -> impl Strategy<Value = Vec<Objectives<f64>>> {
    prop::collection::vec(
        (0..max, 0..max, 0..max).prop_map(|(a, b, c)| Objectives::new(a as f64, b as f64, c as f64)),
        0..60,
    )
}

fn front_of(objs: &[Objectives<f64>]) -> Vec<Objectives<f64>> {
    let mut f: Vec<Objectives<f64>> = front_indices(objs).into_iter().map(|i| objs[i]).collect();
    f.sort_by(|a, b| a.to_array().partial_cmp(&b.to_array()).unwrap());
    f
}

fn sigma_units(units: &[usize]) -> f64 {
    let n = units.len() as f64;
    let mean = units.iter().sum::<usize>() as f64 / n;
    (units.iter().map(|&u| (u as f64 - mean).powi(2)).sum::<f64>() / n).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn canonicalize_is_idempotent(raw in raw_cells(16)) {
        let b = resnet();
        let a = canonicalize(&raw, &b).unwrap();
        prop_assert!(a.validate(&b).is_ok());
        prop_assert_eq!(canonicalize(a.ratios(), &b).unwrap(), a);
    }

    #[test]
    fn encodings_round_trip(a in arch(), h in hw()) {
        let b = resnet();
        prop_assert_eq!(decode16(&encode16(&a), &b).unwrap(), a.clone());
        let p = CodesignPoint { arch: a, hw: h };
        prop_assert_eq!(decode19(&encode19(&p), &b, h.bw, h.mem).unwrap(), p.clone());
        let other_bw = CodesignPoint { hw: HwConfig { bw: if h.bw == 32 { 64 } else { 32 }, ..h }, ..p.clone() };
        prop_assert_eq!(encode19(&p), encode19(&other_bw));
    }

    #[test]
    fn latency_is_monotone_in_hardware(a in arch(), h in hw(), field in 0usize..4) {
        let o = Oracle::new(resnet(), OracleConfig::default());
        let mut bigger = h;
        match field {
            0 => bigger.pf *= 2,
            1 => bigger.pc *= 2,
            2 => bigger.pv *= 2,
            _ => bigger.bw *= 2,
        }
        let base = o.evaluate(&CodesignPoint { arch: a.clone(), hw: h }).unwrap();
        let more = o.evaluate(&CodesignPoint { arch: a, hw: bigger }).unwrap();
        prop_assert!(more.latency_ms <= base.latency_ms);
    }

    #[test]
    fn adding_a_cell_never_speeds_up(a in arch(), h in hw(), block in 0usize..4, r in prop::sample::select(Ratio::ACTIVE.to_vec())) {
        let b = resnet();
        let units = a.units_per_block(&b);
        prop_assume!(units[block] < 4);
        let mut raw = a.ratios().to_vec();
        raw[block * 4 + units[block]] = r;
        let grown = canonicalize(&raw, &b).unwrap();
        let o = Oracle::new(b.clone(), OracleConfig::default());
        let before = o.evaluate(&CodesignPoint { arch: a.clone(), hw: h }).unwrap();
        let after = o.evaluate(&CodesignPoint { arch: grown.clone(), hw: h }).unwrap();
        prop_assert!(after.latency_ms >= before.latency_ms);
        // The loss also gains a depth-imbalance term, so it can only be
        // compared when the imbalance does not grow.
        if sigma_units(&grown.units_per_block(&b)) <= sigma_units(&units) {
            prop_assert!(synthetic_ce(&grown, &b) < synthetic_ce(&a, &b));
        }
    }

    #[test]
    fn oracle_is_deterministic(a in arch(), h in hw()) {
        let o = Oracle::new(resnet(), OracleConfig::default());
        let p = CodesignPoint { arch: a, hw: h };
        let (x, y) = (o.evaluate(&p).unwrap(), o.evaluate(&p).unwrap());
        prop_assert_eq!(x.latency_ms.to_bits(), y.latency_ms.to_bits());
        prop_assert_eq!(x.power_w.to_bits(), y.power_w.to_bits());
        prop_assert_eq!(x.ce.to_bits(), y.ce.to_bits());
    }

    #[test]
    fn front_is_idempotent(objs in objectives(8)) {
        let f = front_of(&objs);
        prop_assert_eq!(front_of(&f), f);
    }

    #[test]
    fn front_of_union_within_union_of_fronts(p in objectives(8), q in objectives(8)) {
        let mut pq = p.clone();
        pq.extend_from_slice(&q);
        let mut both = front_of(&p);
        both.extend(front_of(&q));
        for x in front_of(&pq) {
            prop_assert!(both.contains(&x));
        }
    }

    #[test]
    fn front_survives_monotone_rescaling(objs in objectives(10), axis in 0usize..3) {
        let warp = |v: f64| (v * 0.37).exp() * 5.0 - 2.0;
        let warped: Vec<Objectives<f64>> = objs
            .iter()
            .map(|o| {
                let mut a = o.to_array();
                a[axis] = warp(a[axis]);
                Objectives::new(a[0], a[1], a[2])
            })
            .collect();
        let mut i = front_indices(&objs);
        let mut j = front_indices(&warped);
        i.sort_unstable();
        j.sort_unstable();
        prop_assert_eq!(i, j);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn prediction_ignores_row_order(seed in 0u64..1000, n in 3usize..25, d in 1usize..6) {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 4.0 - 2.0
        };
        let x = Matrix::from_fn(n, d, |_, _| next());
        let y: Vec<f64> = (0..n).map(|_| next()).collect();
        let probe: Vec<f64> = (0..d).map(|_| next()).collect();
        let hp = Hyperparameters {
            family: KernelFamily::Matern52,
            lengthscales: vec![1.3; d],
            signal_variance: 1.1,
            noise_variance: 0.05,
            constant_mean: 0.2,
        };
        let perm: Vec<usize> = (0..n).rev().collect();
        let xp = Matrix::from_fn(n, d, |i, j| x.get(perm[i], j));
        let yp: Vec<f64> = perm.iter().map(|&i| y[i]).collect();
        let a = GpModel::new(hp.clone(), Standardizer::identity(d), x, y).unwrap();
        let b = GpModel::new(hp, Standardizer::identity(d), xp, yp).unwrap();
        let (ma, va) = a.predict(&probe).unwrap();
        let (mb, vb) = b.predict(&probe).unwrap();
        prop_assert!((ma - mb).abs() <= 1e-10 && (va - vb).abs() <= 1e-10);
    }

    #[test]
    fn ga_keeps_feasible_designs(seed in 0u64..10_000) {
        let oracle = Oracle::new(BackboneSpec::resnet50_prefix(2, 3, 2), OracleConfig::default());
        let domain = HwDomain {
            pf: vec![8, 32, 128],
            pc: vec![8, 32, 128],
            pv: vec![4, 16],
            bw: vec![64],
            mem: vec![4 << 20],
        };
        let pred = OraclePredictors::new(&oracle);
        let w = FitnessWeights::from_preset(Preset::B).with_budgets(600, 1_700_000);
        let cfg = GaConfig { generations: 10, ..GaConfig::default().with_seed(seed) };
        let r = run_ga(&cfg, &w, &pred, &oracle.backbone, &domain).unwrap();
        prop_assert!(r.best_point.validate(&oracle.backbone).is_ok());
        for pair in r.history.windows(2) {
            prop_assert!(pair[1].best <= pair[0].best);
        }
        if !r.all_penalized {
            let res = oracle.resources(&r.best_point).unwrap();
            prop_assert!(res.dsp_used <= 600 && res.mem_used <= 1_700_000);
        }
    }
}

#[test]
fn adding_a_cell_can_raise_the_loss() {
    let b = resnet();
    let mut raw = vec![Ratio::Skip; 16];
    for block in 0..4 {
        raw[block * 4..block * 4 + 3].fill(Ratio::Full);
    }
    let even = canonicalize(&raw, &b).unwrap();
    raw[3] = Ratio::Full;
    let grown = canonicalize(&raw, &b).unwrap();
    // sigma_u goes 0 -> sqrt(3)/4, outweighing the capacity gain
    assert!(synthetic_ce(&grown, &b) > synthetic_ce(&even, &b));
}
