//! Spin-1/2 operator algebra for a single electron and for an electron–nucleus pair.
//!
//! Two-spin operators act on the product basis
//!
//! ```text
//!   index 0: |αα⟩   index 1: |αβ⟩   index 2: |βα⟩   index 3: |ββ⟩
//! ```
//!
//! with the electron (S) as the first tensor factor and the nucleus (I) as the
//! second. Every index-based operation in this crate (subspace extraction, the
//! DQ/ZQ relaxation mask) relies on this ordering. The double-quantum block is
//! {|αα⟩, |ββ⟩} = indices {0, 3}; the zero-quantum block is {|αβ⟩, |βα⟩} =
//! indices {1, 2}.
//!
//! States are deviation density matrices: traceless, with ρ(0) = S_z for a
//! fully polarized electron. Expectation values are plain traces ⟨O⟩ = Tr[Oρ].

use nalgebra::SMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// A dense N×N complex operator (N = 2 for one spin, 4 for the pair).
pub type Operator<const N: usize> = SMatrix<Complex64, N, N>;
pub type Op2 = Operator<2>;
pub type Op4 = Operator<4>;

/// Default tolerance for Hermiticity checks (max element-wise |M − M†|).
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Largest imaginary part tolerated in Tr[Oρ] before the state is declared corrupted.
pub const IMAGINARY_RESIDUE_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const HALF: Complex64 = Complex64::new(0.5, 0.0);
const HALF_I: Complex64 = Complex64::new(0.0, 0.5);

#[inline]
fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Max element-wise |M − M†|.
pub fn hermiticity_error<const N: usize>(m: &Operator<N>) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..N {
        for j in i..N {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn is_hermitian<const N: usize>(m: &Operator<N>, tol: f64) -> bool {
    hermiticity_error(m) <= tol
}

/// [A, B] = AB − BA.
pub fn commutator<const N: usize>(a: &Operator<N>, b: &Operator<N>) -> Operator<N> {
    a * b - b * a
}

/// Max element-wise |A − B|.
pub fn max_abs_diff<const N: usize>(a: &Operator<N>, b: &Operator<N>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Tr[AB] without forming the product.
#[inline]
pub fn trace_product<const N: usize>(a: &Operator<N>, b: &Operator<N>) -> Complex64 {
    let mut acc = ZERO;
    for i in 0..N {
        for j in 0..N {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Kronecker product of two single-spin operators, electron factor first.
pub fn kron(s: &Op2, i: &Op2) -> Op4 {
    Op4::from_fn(|r, c| s[(r / 2, c / 2)] * i[(r % 2, c % 2)])
}

/// Single spin-1/2 operators (σ/2 convention).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinHalf {
    pub x: Op2,
    pub y: Op2,
    pub z: Op2,
    pub plus: Op2,
    pub minus: Op2,
    pub identity: Op2,
}

pub fn spin_half_operators() -> SpinHalf {
    let x = Op2::new(ZERO, HALF, HALF, ZERO);
    let y = Op2::new(ZERO, -HALF_I, HALF_I, ZERO);
    let z = Op2::new(HALF, ZERO, ZERO, -HALF);
    let plus = Op2::new(ZERO, ONE, ZERO, ZERO);
    let minus = Op2::new(ZERO, ZERO, ONE, ZERO);
    SpinHalf {
        x,
        y,
        z,
        plus,
        minus,
        identity: Op2::identity(),
    }
}

/// Cartesian component of a single spin, with `E` standing for the identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Component {
    E,
    X,
    Y,
    Z,
}

impl Component {
    pub const ALL: [Component; 4] = [Component::E, Component::X, Component::Y, Component::Z];

    fn pick(self, ops: &SpinHalf) -> Op2 {
        match self {
            Component::E => ops.identity,
            Component::X => ops.x,
            Component::Y => ops.y,
            Component::Z => ops.z,
        }
    }
}

/// Electron (S) and nuclear (I) operators lifted to the 4-dimensional pair space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoSpin {
    pub sx: Op4,
    pub sy: Op4,
    pub sz: Op4,
    pub s_plus: Op4,
    pub s_minus: Op4,
    pub ix: Op4,
    pub iy: Op4,
    pub iz: Op4,
    pub i_plus: Op4,
    pub i_minus: Op4,
    pub identity: Op4,
    single: SpinHalf,
}

pub fn two_spin_operators() -> TwoSpin {
    let one = spin_half_operators();
    let e = one.identity;
    TwoSpin {
        sx: kron(&one.x, &e),
        sy: kron(&one.y, &e),
        sz: kron(&one.z, &e),
        s_plus: kron(&one.plus, &e),
        s_minus: kron(&one.minus, &e),
        ix: kron(&e, &one.x),
        iy: kron(&e, &one.y),
        iz: kron(&e, &one.z),
        i_plus: kron(&e, &one.plus),
        i_minus: kron(&e, &one.minus),
        identity: Op4::identity(),
        single: one,
    }
}

impl TwoSpin {
    /// S_a ⊗ I_b, e.g. `product(Z, X)` = S_zI_x. `E` selects the identity factor.
    pub fn product(&self, s: Component, i: Component) -> Op4 {
        kron(&s.pick(&self.single), &i.pick(&self.single))
    }

    /// The 16 mutually orthogonal product operators S_a I_b, a, b ∈ {E, x, y, z}.
    pub fn product_basis(&self) -> Vec<((Component, Component), Op4)> {
        let mut out = Vec::with_capacity(16);
        for s in Component::ALL {
            for i in Component::ALL {
                out.push(((s, i), self.product(s, i)));
            }
        }
        out
    }
}

/// Fictitious spin-1/2 operators spanning the double- and zero-quantum blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FictitiousBasis {
    pub dqx: Op4,
    pub dqy: Op4,
    pub dqz: Op4,
    pub zqx: Op4,
    pub zqy: Op4,
    pub zqz: Op4,
}

pub fn fictitious_basis() -> FictitiousBasis {
    use Component::*;
    let ts = two_spin_operators();
    let xx = ts.product(X, X);
    let yy = ts.product(Y, Y);
    let xy = ts.product(X, Y);
    let yx = ts.product(Y, X);
    FictitiousBasis {
        dqx: xx - yy,
        dqy: xy + yx,
        dqz: (ts.sz + ts.iz) * HALF,
        zqx: xx + yy,
        zqy: xy - yx,
        zqz: (ts.sz - ts.iz) * HALF,
    }
}

impl FictitiousBasis {
    pub fn triple(&self, which: Subspace) -> [Op4; 3] {
        match which {
            Subspace::Dq => [self.dqx, self.dqy, self.dqz],
            Subspace::Zq => [self.zqx, self.zqy, self.zqz],
        }
    }
}

/// One of the two 2-level blocks of the pair space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subspace {
    Dq,
    Zq,
}

impl Subspace {
    /// Row/column indices of the block in the product basis.
    pub const fn indices(self) -> [usize; 2] {
        match self {
            Subspace::Dq => [0, 3],
            Subspace::Zq => [1, 2],
        }
    }
}

/// Deviation density matrix. Hermitian by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityState<const N: usize> {
    matrix: Operator<N>,
}

impl<const N: usize> DensityState<N> {
    /// Wrap a matrix, rejecting it if it is not Hermitian to [`HERMITIAN_TOL`].
    pub fn new(matrix: Operator<N>) -> Result<Self> {
        Self::with_tolerance(matrix, HERMITIAN_TOL)
    }

    pub fn with_tolerance(matrix: Operator<N>, tol: f64) -> Result<Self> {
        let err = hermiticity_error(&matrix);
        if err > tol {
            return Err(Error::InvalidParameter {
                name: "density matrix",
                reason: format!("not Hermitian (max |ρ - ρ†| = {err:e})"),
            });
        }
        Ok(Self { matrix })
    }

    /// Used by the propagator, whose updates preserve Hermiticity.
    pub(crate) fn from_matrix_unchecked(matrix: Operator<N>) -> Self {
        Self { matrix }
    }

    pub fn zero() -> Self {
        Self {
            matrix: Operator::<N>::zeros(),
        }
    }

    pub fn matrix(&self) -> &Operator<N> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Operator<N> {
        self.matrix
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// Tr[ρ²].
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Eigenvalues in ascending order.
    pub fn spectrum(&self) -> [f64; N] {
        crate::linalg::HermitianEigen::new(&self.matrix).sorted_values()
    }
}

impl DensityState<2> {
    /// ρ = S_z.
    pub fn polarization() -> Self {
        Self {
            matrix: spin_half_operators().z,
        }
    }

    /// ρ = sin(φ)·S_x + cos(φ)·S_y, a pure transverse coherence.
    pub fn coherence(phi: f64) -> Self {
        let s = spin_half_operators();
        Self {
            matrix: s.x * re(phi.sin()) + s.y * re(phi.cos()),
        }
    }
}

impl DensityState<4> {
    /// ρ = S_z, the electron-polarized starting point of every DNP run.
    pub fn electron_polarization() -> Self {
        Self {
            matrix: two_spin_operators().sz,
        }
    }
}

/// ⟨O⟩ = Tr[Oρ], checked.
pub fn expect<const N: usize>(op: &Operator<N>, rho: &DensityState<N>) -> Result<f64> {
    let herm = hermiticity_error(op);
    if herm > HERMITIAN_TOL {
        return Err(Error::NonHermitianObservable(herm));
    }
    let value = trace_product(op, rho.matrix());
    if value.im.abs() > IMAGINARY_RESIDUE_TOL {
        return Err(Error::ImaginaryResidue(value.im));
    }
    Ok(value.re)
}

/// Restrict a pair state to its DQ or ZQ 2×2 block.
pub fn reduce_subspace(rho: &DensityState<4>, which: Subspace) -> DensityState<2> {
    let [a, b] = which.indices();
    let m = rho.matrix();
    DensityState {
        matrix: Op2::new(m[(a, a)], m[(a, b)], m[(b, a)], m[(b, b)]),
    }
}

/// Bloch vector of a 2×2 state, (Tr[σ_x ρ], Tr[σ_y ρ], Tr[σ_z ρ]).
///
/// This is 2·Tr[S_a ρ]; the factor 2 undoes the ½ carried by a fully polarized
/// spin-½ (or fictitious-spin) deviation matrix, so ρ = S_z sits at z = +1.
pub fn bloch_vector(rho2: &DensityState<2>) -> [f64; 3] {
    let m = rho2.matrix();
    let x = 2.0 * m[(0, 1)].re;
    let y = -2.0 * m[(0, 1)].im;
    let z = (m[(0, 0)] - m[(1, 1)]).re;
    [x, y, z]
}
