use benrec::benford::{analyze_sample, BenfordReport, Thresholds};
use benrec::decompose::build_lambda_mu;
use benrec::presets::{find_preset, list_presets, Preset};
use benrec::recurrence::iterate_linear;
use benrec::{RecurrenceSpec, SequenceSample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn sequence_csv_round_trip_is_bit_exact() {
    for name in ["fibonacci", "factorial", "uniform_chain", "exp_poly"] {
        let s = find_preset(name).unwrap().model_at(500).generate().unwrap();
        let back = SequenceSample::values_from_csv(&s.to_csv()).unwrap();
        assert_eq!(back, s.values, "{name}");
    }
}

#[test]
fn report_json_round_trip() {
    let s = find_preset("factorial_pow").unwrap().model_at(3000).generate().unwrap();
    let r = analyze_sample(&s, 20, &Thresholds::default()).unwrap();
    let back: BenfordReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
    assert_eq!(back, r);
}

#[test]
fn preset_registry_json_round_trip() {
    let all = list_presets();
    let back: Vec<Preset> = serde_json::from_str(&serde_json::to_string(&all).unwrap()).unwrap();
    assert_eq!(back, all);
}

#[test]
fn decomposition_reproduces_random_depth_two_sequences() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut checked = 0;
    while checked < 30 {
        let f = format!("{} + {:.2}*n", rng.gen_range(1..4), rng.gen_range(0.0..1.5));
        let g = format!("{:.2}", rng.gen_range(-2.0..2.0));
        let init = [rng.gen_range(1..6) as f64, rng.gen_range(1..6) as f64];
        let spec = RecurrenceSpec::linear(&[f.as_str(), g.as_str()], &init, 40).unwrap();
        let Ok(dec) = build_lambda_mu(&spec, None) else { continue };
        assert!(dec.identities_hold(), "{f}, {g}: {:?}", dec.residuals);
        let seq = iterate_linear(&spec.clone().with_horizon(41)).unwrap();
        let cf = dec.closed_form_prefix().unwrap();
        for n in 1..=41 {
            let a = seq.term(n);
            if a.is_zero() {
                continue;
            }
            assert!(a.rel_diff(&cf[n - 1]) < 1e-8, "{f}, {g}, n = {n}");
        }
        checked += 1;
    }
}
