use dnafb::infodensity::{sample_densities, sample_dt, DtEstimate, InvalidPolicy, SampleConfig, Threshold};
use dnafb::{make_scheme, ChannelParams, DecoderOptions, InnerScheme, SchemeConfig, SchemeKind};

fn scheme(kind: SchemeKind) -> InnerScheme {
    make_scheme(kind, &SchemeConfig::default(), 1).unwrap()
}

fn config(outer_len: usize, samples: usize, reads: usize, seed: u64) -> SampleConfig {
    SampleConfig {
        outer_len,
        samples,
        reads,
        seed,
        decoder: DecoderOptions::default(),
    }
}

fn dt(kind: SchemeKind, p: f64, outer_len: usize, samples: usize, reads: usize) -> DtEstimate {
    sample_dt(
        &scheme(kind),
        &ChannelParams::symmetric(p).unwrap(),
        &config(outer_len, samples, reads, 21),
        Threshold::default(),
        InvalidPolicy::Exclude,
    )
    .unwrap()
}

#[test]
fn mean_density_decreases_with_p() {
    let s = scheme(SchemeKind::Tvc2);
    let means: Vec<f64> = [0.04, 0.1, 0.16]
        .iter()
        .map(|&p| {
            let xs = sample_densities(&s, &ChannelParams::symmetric(p).unwrap(), &config(60, 150, 1, 4)).unwrap();
            let valid: Vec<f64> = xs.iter().filter(|x| x.valid).map(|x| x.i_bits).collect();
            valid.iter().sum::<f64>() / valid.len() as f64
        })
        .collect();
    assert!(means[0] > means[1] && means[1] > means[2], "{means:?}");
}

#[test]
fn estimates_lie_in_the_unit_interval_with_consistent_metadata() {
    for kind in SchemeKind::ALL {
        let outer_len = if kind == SchemeKind::Cc { 120 } else { 30 };
        let est = dt(kind, 0.12, outer_len, 40, 1);
        assert!((0.0..=1.0).contains(&est.bound), "{kind}: {est:?}");
        assert!(est.stderr >= 0.0);
        assert_eq!(est.reads, 1);
        assert_eq!(est.len, scheme(kind).coded_len(outer_len));
        assert_eq!(est.threshold_bits, 0.5 * est.len as f64);
    }
}

#[test]
fn a_second_read_lowers_the_bound() {
    for kind in [SchemeKind::Tvc1, SchemeKind::Tvc2] {
        let one = dt(kind, 0.14, 30, 200, 1);
        let two = dt(kind, 0.14, 30, 200, 2);
        assert!(two.bound < one.bound, "{kind}: {} vs {}", two.bound, one.bound);
        assert_eq!(two.reads, 2);
    }
}

#[test]
fn time_varying_books_beat_the_watermark_code() {
    let tvc = dt(SchemeKind::Tvc1, 0.1, 60, 200, 1);
    let wm = dt(SchemeKind::Wm, 0.1, 60, 200, 1);
    assert!(tvc.bound <= wm.bound, "{} vs {}", tvc.bound, wm.bound);
}

#[test]
fn noiseless_density_is_exact_for_every_scheme() {
    for kind in SchemeKind::ALL {
        let s = scheme(kind);
        let outer_len = if kind == SchemeKind::Cc { 30 } else { 12 };
        let xs = sample_densities(&s, &ChannelParams::noiseless(4), &config(outer_len, 5, 1, 9)).unwrap();
        let exact = outer_len as f64 * (s.outer_alphabet() as f64).log2();
        for x in xs {
            assert!(x.valid);
            assert!((x.i_bits - exact).abs() < 1e-9, "{kind}: {} vs {exact}", x.i_bits);
        }
    }
}

#[test]
fn per_frame_layout_draws_a_fresh_pattern_per_sample() {
    let cfg = SchemeConfig {
        layout: dnafb::inner::LayoutPolicy::PerFrame,
        ..SchemeConfig::default()
    };
    let s = make_scheme(SchemeKind::Tvc1, &cfg, 1).unwrap();
    let params = ChannelParams::symmetric(0.1).unwrap();
    let a = sample_densities(&s, &params, &config(30, 20, 1, 2)).unwrap();
    let b = sample_densities(&s, &params, &config(30, 20, 1, 2)).unwrap();
    assert_eq!(a, b);
    assert!(a.iter().all(|x| x.valid && x.i_bits.is_finite()));
}
