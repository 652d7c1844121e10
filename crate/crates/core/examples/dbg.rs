use sns_finite_key::*;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let dist: f64 = args[1].parse().unwrap();
    let n: u128 = args[2].parse::<f64>().unwrap() as u128;
    let e_d: f64 = args[3].parse().unwrap();
    let p_d: f64 = args[4].parse().unwrap();
    let mut exp = ExperimentParams::default();
    exp.e_d = e_d;
    exp.p_d = p_d;
    let sec = security_budget(1e-10).unwrap();
    let point = ChannelPoint::new(dist, &exp);
    let space = SearchSpace::default();
    let mut hints = StartHints::default();
    if args.len() > 5 {
        let n_hint = args[5].parse::<f64>().unwrap() as u128;
        let prev = optimize(&exp, &sec, &point, n_hint, &space, 42).unwrap();
        hints.params.push(prev.best_params.clone());
    }
    let report =
        optimize_with_hints(&exp, &sec, &point, n, &space, 42, &hints, 64, 4000).unwrap();
    println!("{:?}", report.best_params);
    println!(
        "L={dist} N={n:e} R = {:e}, key_len = {}",
        report.best_result.rate_per_pulse, report.best_result.key_len
    );
    let p = &report.best_params;
    let stats = asymptotic_statistics(p, &exp, &point);
    let obs = simulate_observations(p, &exp, &point).unwrap();
    let (est, _) = estimate(p, &obs, sec.xi, FluctuationMode::Asymptotic).unwrap();
    let ra = asymptotic_rate(p, stats.s_z, stats.e_z, est.s1z_lower, est.e1ph_upper_expected, exp.f);
    println!("asymptotic: s1z={:e} e1ph={:e} E_z={:e} R_asym={ra:?}", est.s1z_lower, est.e1ph_upper_expected, stats.e_z);
}
