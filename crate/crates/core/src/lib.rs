//! Low-rank tensor completion with the minimax p-th order concave penalty.
//!
//! The crate is organised bottom-up:
//!
//! * [`tensor`]: dense N-way tensors, mode-n and mode-q unfoldings;
//! * [`fourier`], [`tsvd`]: DFT along mode 3, t-product, t-SVD, tubal rank;
//! * [`penalty`]: MPCP/MCP/TNN scalar penalties and proximal maps;
//! * [`tensor_prox`]: the tensor p-th order tau norm and its proximal map;
//! * [`solver`]: the multi-mode ADMM completion solver;
//! * [`metrics`]: PSNR, SSIM, ERGAS;
//! * [`io`], [`data`]: NPY/PGM/CSV files, masks and synthetic data.
//!
//! Modes are numbered from 1; element indices from 0.

pub mod data;
pub mod error;
pub mod fourier;
pub mod io;
pub mod metrics;
pub mod penalty;
pub mod solver;
pub mod tensor;
pub mod tensor_prox;
pub mod tsvd;

pub use error::{Error, Result};
pub use fourier::{dft3, idft3, ComplexTensor3, FourierOptions};
pub use penalty::{PenaltyKind, PenaltySpec, ProxBranch, ProxResult};
pub use solver::{IterationLog, ObservationMask, ProxWeight, SolveOutput, SolverConfig, SolverState, StopRule};
pub use tensor::{fold_n, fold_q, mode_n_product, unfold_n, unfold_q, DenseTensor, ModeQIndex};
pub use tensor_prox::{matrix_ptau_prox, tensor_ptau_norm, tensor_ptau_prox};
pub use tsvd::{n_tubal_rank, t_product, t_svd, tnn, tubal_rank, TSvdFactors};
