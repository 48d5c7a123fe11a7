use lppl_vnv::config::ExperimentConfig;
use lppl_vnv::pipeline::{run_records, SimStatus};
use lppl_vnv::timeseries::WindowFraction;

fn main() {
    let runs: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let alpha: f64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(0.19);
    let tmp = std::env::temp_dir().join("lppl_gap");
    let mut cfg = ExperimentConfig::desk();
    cfg.batch.runs = runs;
    cfg.abcde.alpha = alpha;
    cfg.abcde.state_bound = 1e100;
    cfg.output.dir = tmp.to_string_lossy().into_owned();
    let (_dir, records) = run_records(&cfg).unwrap();
    println!("sim, class, gap(tc-end), err(|tc_hat-tc|), tc_hat-end");
    for r in &records {
        if r.status != SimStatus::Ok { continue; }
        let tc = r.tc.unwrap();
        for f in WindowFraction::ALL {
            let w = &r.windows[&f];
            let end_t = w.end_index as f64 * cfg.abcde.dt;
            let est = &r.estimates[&f][&lppl_vnv::estimators::Algorithm::Subordinated];
            let tc_hat = est.median.tc();
            println!("{:3} {:8} gap={:7.3} err={:7.3} tc_hat_minus_end={:7.3}",
                r.run_id, format!("{f:?}"), tc - end_t, est.tc_error, tc_hat - end_t);
        }
    }
}
