use std::collections::BTreeSet;

use liesym::telegraph::{checklist, run_paper_report, Fixtures, ItemVerdict, ReportOptions};

fn verdict_of(r: &liesym::telegraph::DiscrepancyReport, id: &str) -> &'static str {
    r.item(id).unwrap_or_else(|| panic!("missing item {id}")).verdict.label()
}

#[test]
fn report_is_reproducible() {
    let opts = ReportOptions::default();
    let a = run_paper_report(opts).unwrap().to_json();
    let b = run_paper_report(opts).unwrap().to_json();
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["seed"], 42);
}

#[test]
fn ids_match_the_checklist() {
    let r = run_paper_report(ReportOptions::default()).unwrap();
    let ids: Vec<String> = r.items.iter().map(|i| i.id.clone()).collect();
    assert_eq!(ids, checklist());
    assert!(!r.has_unresolved());
    assert_eq!(r.summary.confirmed + r.summary.paper_typo, r.items.len());
}

/// Every object in the verbatim fixture is the subject of some item.
#[test]
fn manifest_covers_every_fixture_object() {
    let fx = Fixtures::load().unwrap();
    let ids: BTreeSet<String> = checklist().into_iter().collect();
    let has = |id: String| assert!(ids.contains(&id), "no item for {id}");
    let d = &fx.verbatim;
    for f in d.field_names() {
        has(format!("generator.{f}.symmetry"));
        has(format!("table1.row.{f}"));
        has(format!("adjoint.generated.{f}"));
    }
    for (name, _) in d.equations() {
        has(format!("determining.{name}"));
    }
    for g in d.group_decls() {
        has(format!("group.{}.flow", g.name));
    }
    for t in d.transforms() {
        has(format!("transform.{}.seed_one", t.name));
        has(format!("transform.{}.seed_exp", t.name));
    }
    for m in d.matrices() {
        has(format!("adjoint.{}", m.name));
    }
    for x in d.element_names() {
        has(format!("optimal.{x}"));
    }
    let gs = d.general_solution().unwrap();
    for c in &gs.constants {
        has(format!("gensol.{c}"));
    }
    for p in ["phi_r", "phi_x", "phi_y", "phi_t", "phi_rr", "phi_rx", "phi_ry", "phi_rt", "phi_xx", "phi_xy"]
    {
        assert!(d.expr(p).is_ok());
        has(format!("prolong.{p}"));
    }
    for s in ["seed_one", "seed_exp"] {
        has(format!("seed.{s}"));
    }
    for span in ["radical", "levi", "centralizer", "derived", "minimal_ideal"] {
        assert!(d.span(span, &fx.labels()).is_ok());
    }
    for id in
        ["claims.radical.is_ideal", "claims.levi.subalgebra", "claims.centralizer", "claims.derived_algebra"]
    {
        has(id.to_string());
    }
    assert_eq!(d.table_names(), ["T1", "T2"]);
    has("table1.jacobi".into());
    has("table2.jacobi".into());
    has("generator.count".into());
}

#[test]
fn frozen_verdicts() {
    let r = run_paper_report(ReportOptions::default()).unwrap();
    for i in 1..=11 {
        assert_eq!(verdict_of(&r, &format!("generator.v{i}.symmetry")), "Confirmed");
    }
    let typos: BTreeSet<&str> = r
        .items
        .iter()
        .filter(|i| matches!(i.verdict, ItemVerdict::PaperTypo { .. }))
        .map(|i| i.id.as_str())
        .collect();
    let expected: BTreeSet<&str> = [
        "adjoint.M1",
        "adjoint.M2",
        "adjoint.M11",
        "claims.derived_algebra",
        "claims.levi.solvable",
        "claims.levi.subalgebra",
        "claims.minimal_ideal",
        "claims.radical.computed",
        "claims.radical.is_ideal",
        "claims.radical.nilpotent",
        "determining.e13",
        "generator.count",
        "gensol.c5",
        "gensol.c9",
        "gensol.c11",
        "group.g5.flow",
        "group.g6.flow",
        "group.g7.flow",
        "group.g8.flow",
        "group.g9.flow",
        "group.g10.flow",
        "group.g11.flow",
        "prolong.phi_t",
        "table1.antisymmetry.(2,5)",
        "table1.antisymmetry.(5,10)",
        "table1.antisymmetry.(6,8)",
        "table1.antisymmetry.(6,9)",
        "table1.antisymmetry.(6,10)",
        "table1.antisymmetry.(7,8)",
        "table1.jacobi",
        "table1.row.v2",
        "table1.row.v3",
        "table1.row.v5",
        "table1.row.v6",
        "table1.row.v7",
        "table1.row.v8",
        "table1.row.v10",
        "table1.row.v11",
        "table2.jacobi",
        "table2.quotient",
        "transform.u5.seed_exp",
        "transform.u10.seed_exp",
        "transform.u11.seed_exp",
    ]
    .into_iter()
    .collect();
    assert_eq!(typos, expected);
    let witness = |id: &str| match &r.item(id).unwrap().verdict {
        ItemVerdict::PaperTypo { witness } => witness.clone(),
        v => panic!("{id}: {v:?}"),
    };
    assert_eq!(witness("claims.radical.is_ideal"), "not an ideal: [v1, v6] = -v7");
    assert!(witness("table1.antisymmetry.(2,5)").contains("2*a^2*v3 - k*v4"));
    assert!(witness("group.g5.flow").contains("1/2*a^(-2)"));
    assert!(witness("determining.e13").starts_with("v5: 2*k"));
}

#[test]
fn seed_changes_only_numeric_fields() {
    let a = run_paper_report(ReportOptions { seed: 7, tol: 1e-8 }).unwrap();
    let b = run_paper_report(ReportOptions::default()).unwrap();
    let la: Vec<_> = a.items.iter().map(|i| (&i.id, i.verdict.label())).collect();
    let lb: Vec<_> = b.items.iter().map(|i| (&i.id, i.verdict.label())).collect();
    assert_eq!(la, lb);
}
