use crate::error::{Error, Result};
use crate::operator::{CMatrix, HilbertSpace, Operator, C64};

/// Ladder operators on `span{φ₀, …, φ_cutoff}`.
///
/// `b φ_i = √i φ_{i-1}` and `b† φ_i = √(i+1) φ_{i+1}` for `i < cutoff`, with
/// `b† φ_cutoff = 0`. `number` is the exact diagonal `diag(0, …, cutoff)`,
/// which equals `b†b` on every retained state; `[b, b†] = I` fails only in
/// the bottom-right entry.
#[derive(Clone, Debug)]
pub struct FockToolbox {
    pub cutoff: usize,
    pub space: HilbertSpace,
    pub b: Operator,
    pub b_dag: Operator,
    pub number: Operator,
}

impl FockToolbox {
    pub fn identity(&self) -> Operator {
        Operator::identity(&self.space)
    }

    /// `|φ_i⟩⟨φ_j|`.
    pub fn basis_matrix(&self, i: usize, j: usize) -> Operator {
        let d = self.cutoff + 1;
        let mut m = CMatrix::zeros(d, d);
        m[(i, j)] = C64::new(1.0, 0.0);
        Operator::new(self.space.clone(), m).expect("indices in range")
    }

    /// Projection onto the first `states` basis vectors.
    pub fn window(&self, states: usize) -> Operator {
        let d = self.cutoff + 1;
        let diag: Vec<C64> = (0..d)
            .map(|i| if i < states { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
            .collect();
        Operator::from_diagonal(&self.space, &diag).expect("diagonal of matching length")
    }
}

pub fn fock_toolbox(cutoff: usize) -> Result<FockToolbox> {
    if cutoff < 1 {
        return Err(Error::InvalidArgument("Fock cutoff must be at least 1".into()));
    }
    let d = cutoff + 1;
    let space = HilbertSpace::single(d)?;
    let mut b = CMatrix::zeros(d, d);
    for i in 1..d {
        b[(i - 1, i)] = C64::new((i as f64).sqrt(), 0.0);
    }
    let b = Operator::new(space.clone(), b)?;
    let b_dag = b.adjoint();
    let number = Operator::from_diagonal(
        &space,
        &(0..d).map(|i| C64::new(i as f64, 0.0)).collect::<Vec<_>>(),
    )?;
    Ok(FockToolbox { cutoff, space, b, b_dag, number })
}
