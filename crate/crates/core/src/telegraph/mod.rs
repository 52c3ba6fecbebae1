//! Built-in fixtures for the telegraph equation
//! `u_tt + k u_t = a² (r⁻¹ (r u_r)_r + r⁻² u_xx + u_yy)`: every printed
//! object transcribed verbatim, a correction overlay, and the discrepancy
//! report comparing the two against the engine.

use thiserror::Error;

use crate::detsys::{Ansatz, DetsysError};
use crate::dsl::{Document, DslError};
use crate::jetspace::{JetContext, JetError, Pde};
use crate::liealg::{self, LieError, StructureConstants};
use crate::numcheck::NumError;
use crate::prolong::{ProlongError, VectorField};
use crate::structure::StructureError;

pub mod report;

pub use report::{checklist, run_paper_report, DiscrepancyReport, Item, ItemVerdict, ReportOptions};

/// The printed objects, misprints included.
pub const VERBATIM: &str = include_str!("telegraph.lie");
/// Statements replacing the misprinted objects; parsed on top of the
/// declarations of [`VERBATIM`].
pub const CORRECTIONS: &str = include_str!("corrected.lie");

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TelegraphError {
    #[error(transparent)]
    Dsl(#[from] DslError),
    #[error(transparent)]
    Detsys(#[from] DetsysError),
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error(transparent)]
    Num(#[from] NumError),
    #[error(transparent)]
    Prolong(#[from] ProlongError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error("{0}")]
    Fixture(String),
}

pub type Result<T> = std::result::Result<T, TelegraphError>;

/// Both documents with the objects every check needs.
#[derive(Clone, Debug)]
pub struct Fixtures {
    pub verbatim: Document,
    pub corrected: Document,
    pub jc: JetContext,
    pub pde: Pde,
    /// `v1, …, v11` as printed.
    pub fields: Vec<VectorField>,
}

impl Fixtures {
    pub fn load() -> Result<Self> {
        let verbatim = Document::parse(VERBATIM)?;
        let mut corrected = Document::with_context(verbatim.context().clone());
        corrected.extend(CORRECTIONS)?;
        let jc = verbatim.jet_context()?;
        let pde = verbatim.pde(Some("telegraph"))?;
        let fields = verbatim.fields(&jc)?;
        Ok(Fixtures { verbatim, corrected, jc, pde, fields })
    }

    pub fn labels(&self) -> Vec<String> {
        self.fields.iter().map(|f| f.name.clone()).collect()
    }

    /// Generic field with the declared unknown coefficients.
    pub fn ansatz(&self) -> Result<Ansatz> {
        let names = self.verbatim.ansatz().ok_or_else(|| TelegraphError::Fixture("no ansatz".into()))?;
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        Ok(Ansatz::declared(&self.jc, &names)?)
    }

    /// Commutator table of the printed fields, computed from scratch.
    pub fn computed_table(&self) -> Result<StructureConstants> {
        Ok(liealg::commutator_table(&self.fields)?)
    }

    /// Index of a basis label such as `v5`.
    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.fields
            .iter()
            .position(|f| f.name == label)
            .ok_or_else(|| TelegraphError::Fixture(format!("unknown generator `{label}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detsys::check_symmetry;
    use crate::liealg::adjoint_verify_closed;
    use crate::numcheck::{flow_verify, residual_sample, transform_solution, FlowVerdict};
    use crate::structure::{self, Subspace};
    use crate::symexpr::Expr;

    #[test]
    fn fixtures_parse() {
        let fx = Fixtures::load().unwrap();
        assert_eq!(fx.fields.len(), 11);
        assert_eq!(fx.verbatim.equations().len(), 27);
        assert_eq!(fx.verbatim.element_names().len(), 16);
        assert_eq!(fx.verbatim.matrices().len(), 3);
        assert_eq!(fx.verbatim.transforms().len(), 11);
        assert_eq!(fx.verbatim.group_decls().len(), 11);
    }

    #[test]
    fn printed_fields_are_symmetries() {
        let fx = Fixtures::load().unwrap();
        for f in &fx.fields {
            assert!(
                check_symmetry(&fx.jc, &fx.pde, f, 42, 1e-8).unwrap().verdict.is_symmetry(),
                "{}",
                f.name
            );
        }
    }

    #[test]
    fn corrected_table_is_the_computed_one() {
        let fx = Fixtures::load().unwrap();
        let computed = fx.computed_table().unwrap();
        let fixed = fx.corrected.table("T1").unwrap();
        assert!(liealg::diff_tables(&computed, &fixed).is_empty());
        assert!(fixed.antisymmetry_failures().is_empty());
        assert!(structure::jacobi_check(&fixed).passed());
    }

    #[test]
    fn corrected_equation_and_solution() {
        let fx = Fixtures::load().unwrap();
        let ansatz = fx.ansatz().unwrap();
        let system = crate::detsys::determining_system(&fx.jc, &fx.pde, &ansatz).unwrap();
        let checks =
            crate::detsys::check_printed_equations(&fx.jc, &system, fx.corrected.equations(), &fx.fields)
                .unwrap();
        assert!(checks.iter().all(|c| c.satisfied()));
        let gs = fx.corrected.general_solution().unwrap();
        for (g, f) in gs.generators(&ansatz.field).iter().zip(&fx.fields) {
            assert_eq!(g.coefficients(), f.coefficients(), "{}", f.name);
        }
    }

    #[test]
    fn corrected_prolongation_coefficient() {
        let fx = Fixtures::load().unwrap();
        let ansatz = fx.ansatz().unwrap();
        let pf = crate::prolong::prolong(&fx.jc, &ansatz.field, 1).unwrap();
        let t = crate::symexpr::sym("t");
        let fixed = fx.corrected.expr("phi_t").unwrap();
        assert!((fixed - pf.coefficient(&[t]).unwrap()).is_zero());
    }

    #[test]
    fn corrected_adjoint_matrices() {
        let fx = Fixtures::load().unwrap();
        let sc = fx.computed_table().unwrap();
        for m in fx.corrected.matrices() {
            let i = fx.index_of(&m.generator).unwrap();
            let check = adjoint_verify_closed(&sc, i, &m.entries, &m.param).unwrap();
            assert!(check.passed(), "{}: {:?}", m.name, check.failing_rows());
        }
    }

    #[test]
    fn corrected_flow_and_transform() {
        let fx = Fixtures::load().unwrap();
        let map = fx.corrected.group(&fx.jc, "g5").unwrap();
        let check = flow_verify(&fx.jc, &fx.fields[4], &map, 12, 1e-8, 42).unwrap();
        assert_eq!(check.verdict, FlowVerdict::ExactFlow);
        let recipe = fx.corrected.transform("u5").unwrap();
        let eps = Expr::param(&recipe.param);
        for seed in ["seed_one", "seed_exp"] {
            let u = transform_solution(&fx.jc, recipe, fx.verbatim.expr(seed).unwrap(), &eps).unwrap();
            assert!(residual_sample(&fx.jc, &fx.pde, &u, 40, 1e-8, 42).unwrap().pass, "{seed}");
        }
    }

    #[test]
    fn corrected_structure_claims() {
        let fx = Fixtures::load().unwrap();
        let sc = fx.computed_table().unwrap();
        let labels = fx.labels();
        let span = |name: &str| Subspace::from_span(fx.corrected.span(name, &labels).unwrap(), 11);
        let radical = structure::radical_via_killing(&sc);
        assert!(radical.self_check_passed());
        assert!(span("radical").same_as(&radical.radical));
        assert!(structure::is_subalgebra(&span("levi"), &sc));
        assert!(span("centralizer").same_as(&structure::center(&sc)));
        let derived = structure::derived_series(&sc);
        assert!(span("derived").same_as(&derived[1]));
        assert!(structure::is_ideal(&span("minimal_ideal"), &sc).is_none());
        let t2 = fx.corrected.table("T2").unwrap();
        assert!(structure::jacobi_check(&t2).passed());
        let q = structure::quotient(&sc, &radical.radical).unwrap();
        assert_eq!(q.complement, vec![0, 4, 7, 8, 9, 10]);
        assert_eq!(q.sc.c, t2.c);
    }
}
