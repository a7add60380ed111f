use massart_core::losses::{
    clipped_point_loss, decompose_gradient, leaky_relu, massart_gradient, point_loss, structural_lemma_gap,
    structural_point_gap, Region,
};
use massart_core::rng::{stream_rng, Stream};
use massart_core::synth::{generate_dataset, random_direction};
use massart_core::vector::{dot, norm};
use massart_core::{GradientParams, Label, MassartInstance, NoiseModel};
use proptest::prelude::*;
use rand::Rng;

const DIM: usize = 6;

fn sphere() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, DIM)
        .prop_filter("nonzero", |v| norm(v) > 1e-3)
        .prop_map(|v| {
            let n = norm(&v);
            v.into_iter().map(|c| c / n).collect()
        })
}

fn ball() -> impl Strategy<Value = Vec<f64>> {
    (sphere(), 0.0..=1.0f64).prop_map(|(v, r)| v.into_iter().map(|c| c * r).collect())
}

fn label() -> impl Strategy<Value = Label> {
    prop::bool::ANY.prop_map(|b| if b { Label::Pos } else { Label::Neg })
}

fn noise_model() -> impl Strategy<Value = NoiseModel> {
    prop_oneof![
        (0.0..0.45f64).prop_map(|rate| NoiseModel::ConstantRate { rate }),
        (0.0..0.45f64, 0.2..0.9f64).prop_map(|(rate, width)| NoiseModel::BoundaryConcentrated { rate, width }),
        (0.0..0.45f64, any::<u64>()).prop_map(|(rate_bound, salt)| NoiseModel::HashField { rate_bound, salt }),
    ]
}

/// Random white-box instance with margin 0.1 and noise bound at least the model's.
fn instance() -> impl Strategy<Value = MassartInstance> {
    (noise_model(), 0.0..0.05f64, any::<u64>()).prop_map(|(noise, slack, seed)| {
        let eta = (noise.max_rate() + slack).min(0.49);
        MassartInstance::random(DIM, 0.1, eta, noise, seed).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn reweighted_identity(leakage in 0.0..0.5f64, w in ball(), x in sphere(), y in label()) {
        let wx = dot(&w, &x);
        let indicator = if y.value() * wx <= 0.0 { 1.0 } else { 0.0 };
        let other = (indicator - leakage) * wx.abs();
        prop_assert!((point_loss(leakage, &w, &x, y) - other).abs() <= 1e-12);
        prop_assert_eq!(point_loss(leakage, &w, &x, y), leaky_relu(leakage, -y.value() * wx));
    }

    #[test]
    fn gradient_is_twice_the_loss_derivative(
        leakage in 0.0..0.5f64,
        floor in 0.01..0.5f64,
        w in ball(),
        v in ball(),
        x in sphere(),
        y in label(),
    ) {
        prop_assume!(dot(&w, &x).abs() > 1e-3);
        let params = GradientParams::new(leakage, floor).unwrap();
        let g = massart_gradient(&params, &w, &v, &x, y);
        let h = 1e-6;
        for i in 0..DIM {
            let mut plus = w.clone();
            let mut minus = w.clone();
            plus[i] += h;
            minus[i] -= h;
            let fd = (clipped_point_loss(&params, &plus, &v, &x, y) - clipped_point_loss(&params, &minus, &v, &x, y)) / (2.0 * h);
            prop_assert!((g[i] - 2.0 * fd).abs() <= 1e-5 * norm(&g).max(1.0), "coord {}: {} vs {}", i, g[i], 2.0 * fd);
        }
        prop_assert!(norm(&g) <= 2.0 / floor + 1e-12);
    }

    #[test]
    fn gradient_split_reconstructs(inst in instance(), w in ball(), seed in any::<u64>(), y in label()) {
        let mut rng = stream_rng(seed, Stream::Aux);
        let x = inst.sample_margin_point(&mut rng);
        let params = GradientParams::for_learner(inst.eta(), inst.gamma()).unwrap();
        let split = decompose_gradient(&params, &w, &x, &inst);
        let g = massart_gradient(&params, &w, &w, &x, y);
        let g2 = split.noise_component(&x, y);
        for i in 0..DIM {
            prop_assert!((split.drift[i] + g2[i] - g[i]).abs() <= 1e-12);
        }
        // Conditional expectation of g² over the label is zero.
        let p_pos = (1.0 + split.mean_label) / 2.0;
        let pos = split.noise_component(&x, Label::Pos);
        let neg = split.noise_component(&x, Label::Neg);
        for i in 0..DIM {
            prop_assert!((p_pos * pos[i] + (1.0 - p_pos) * neg[i]).abs() <= 1e-12);
        }
        prop_assert!(norm(&split.drift) <= 4.0 / inst.gamma() + 1e-12);
    }

    #[test]
    fn pointwise_structural_inequalities(inst in instance(), w in ball(), seed in any::<u64>()) {
        let mut rng = stream_rng(seed, Stream::Aux);
        let x = inst.sample_margin_point(&mut rng);
        let (region, gap) = structural_point_gap(&w, &x, &inst, inst.eta(), inst.gamma() / 2.0);
        prop_assert_eq!(region == Region::Far, dot(&w, &x).abs() >= inst.gamma() / 2.0);
        prop_assert!(gap >= -1e-9, "{:?} gap {}", region, gap);
    }
}

#[test]
fn structural_gap_both_regions_are_exercised() {
    let inst = MassartInstance::random(DIM, 0.1, 0.3, NoiseModel::BoundaryConcentrated { rate: 0.3, width: 0.3 }, 4).unwrap();
    let data = generate_dataset(&inst, 2000, 5).unwrap();
    let mut rng = stream_rng(6, Stream::Aux);
    let mut seen = [0usize; 2];
    for _ in 0..200 {
        let r: f64 = rng.random();
        let w: Vec<f64> = random_direction(DIM, &mut rng).iter().map(|c| c * r).collect();
        for e in data.examples() {
            let (region, gap) = structural_point_gap(&w, &e.x, &inst, 0.3, 0.05);
            seen[(region == Region::Near) as usize] += 1;
            assert!(gap >= -1e-9);
        }
        assert!(structural_lemma_gap(&w, &data, 0.3, 0.05).unwrap() >= -1e-9);
    }
    assert!(seen[0] > 0 && seen[1] > 0, "{seen:?}");
}

#[test]
fn gradient_noise_component_has_zero_mean() {
    let gamma = 0.1;
    let inst = MassartInstance::random(10, gamma, 0.2, NoiseModel::ConstantRate { rate: 0.2 }, 1).unwrap();
    let params = GradientParams::for_learner(0.2, gamma).unwrap();
    let w = massart_core::UnitVector::basis(10, 0);
    let n = 100_000;
    let data = generate_dataset(&inst, n, 2).unwrap();
    let mut mean = vec![0.0; 10];
    for e in data.examples() {
        let g2 = decompose_gradient(&params, &w, &e.x, &inst).noise_component(&e.x, e.y);
        mean.iter_mut().zip(&g2).for_each(|(m, g)| *m += g / n as f64);
    }
    assert!(norm(&mean) <= 5.0 * (4.0 / gamma) / (n as f64).sqrt());
}
