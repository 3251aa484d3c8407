use laplace_mcp::admm::{solve_cgl_l1, AdmmOptions};
use laplace_mcp::dca::{dca_solve, DcaParams};
use laplace_mcp::experiment::{evaluate, Ensemble, InstanceSpec, Scenario, SyntheticInstance};
use laplace_mcp::io;
use laplace_mcp::{Model, PenaltyParams, ProblemData, SolveReport, Termination};

fn instance() -> SyntheticInstance {
    let spec = InstanceSpec::new(Ensemble::Grid, 16, Scenario::Coarse { factor: 1.5 });
    SyntheticInstance::generate(&spec, 4).unwrap()
}

#[test]
fn files_to_metrics() {
    let inst = instance();
    let dir = tempfile::tempdir().unwrap();
    let cov_path = dir.path().join("s.mtx");
    let truth_path = dir.path().join("truth.json");
    io::write_matrix_market(&cov_path, &inst.covariance).unwrap();
    io::write_graph(&truth_path, &inst.truth).unwrap();

    let cov = io::read_covariance(&cov_path).unwrap();
    assert_eq!(cov, inst.covariance);
    let problem = ProblemData::new(
        cov,
        inst.prior.clone(),
        PenaltyParams::new(0.01, 1.5).unwrap(),
    )
    .unwrap();

    let report = dca_solve(&problem, &DcaParams::default()).unwrap();
    assert_eq!(report.model, Model::CglMcp);
    assert_eq!(report.termination, Termination::Converged);
    let report_path = dir.path().join("report.json");
    report.write_json(&report_path).unwrap();
    let back = SolveReport::read_json(&report_path).unwrap();
    assert_eq!(back.w, report.w);

    let truth = io::read_graph(&truth_path).unwrap();
    let ev = evaluate(&back, &truth, 1e-4).unwrap();
    assert_eq!(ev.f1, 1.0);
    assert!(ev.recovery_error < 2e-2, "{}", ev.recovery_error);
}

#[test]
fn mcp_reduces_bias_of_l1() {
    let inst = instance();
    let lambda = 0.05;
    let problem = inst
        .problem(PenaltyParams::new(lambda, 1.5).unwrap())
        .unwrap();
    let l1 = solve_cgl_l1(&problem, &AdmmOptions::default()).unwrap();
    let mcp = dca_solve(&problem, &DcaParams::default()).unwrap();
    let e_l1 = evaluate(&l1, &inst.truth, 1e-4).unwrap();
    let e_mcp = evaluate(&mcp, &inst.truth, 1e-4).unwrap();
    assert!(e_mcp.recovery_error < e_l1.recovery_error);
    // the MCP objective never exceeds its value at the warm start
    assert!(mcp.objective <= problem.objective(&l1.weights()) + 1e-9);
}
