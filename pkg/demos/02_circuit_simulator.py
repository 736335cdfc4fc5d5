"""
Statevector simulation of the variational circuit
=================================================

The quantum pieces of the model all run the same small ansatz: a Hadamard
wall, an RY angle-encoding layer, then per layer a CNOT brick followed by
trainable RY rotations, read out as one <Z> expectation per qubit.  The
simulator tracks all 2^n amplitudes exactly (noiseless, infinite shots),
so results are deterministic and differentiable.
"""
import numpy as np

from lieqgnn.qsim import (
    AnsatzConfig,
    StateVector,
    apply_cnot,
    apply_h,
    apply_ry,
    brick_layout,
    dense_unitary_oracle,
    gate_sequence,
    run_ansatz,
)

rng = np.random.default_rng(1)

# ----------------------------------------------------------------------
# 1. the circuit shape: 6 qubits, 2 layers -> 12 trainable angles
cfg = AnsatzConfig(n_qubits=6, n_layers=2)
print("qubits:", cfg.n_qubits, " layers:", cfg.n_layers,
      " trainable angles:", cfg.n_params)
print("CNOT brick:", brick_layout(cfg.n_qubits))
print("gate count:", len(gate_sequence(cfg)))

# ----------------------------------------------------------------------
# 2. run it on random angles
encoding = rng.uniform(-np.pi, np.pi, cfg.n_qubits)
theta = rng.uniform(-np.pi, np.pi, cfg.n_params)
z = run_ansatz(cfg, encoding, theta)
print("\n<Z_q> readout:", np.round(z, 4))

# ----------------------------------------------------------------------
# 3. cross-check against an explicit 64x64 unitary build
u, z_dense = dense_unitary_oracle(cfg, encoding, theta)
print("unitarity |U U^dag - I|:", f"{np.max(np.abs(u @ u.conj().T - np.eye(64))):.2e}")
print("kernel vs dense mismatch:", f"{np.max(np.abs(z - z_dense)):.2e}")

# ----------------------------------------------------------------------
# 4. gates one at a time on a StateVector, for the curious
state = StateVector.zero(2)
state = apply_h(state, 0)
state = apply_cnot(state, 0, 1)          # now a Bell pair
print("\nBell amplitudes:", np.round(state.amps, 4))
print("its <Z> per qubit:", np.round(state.z_expectations(), 4))
state = apply_ry(state, 1, np.pi / 2)
print("after RY(pi/2) on qubit 1:", np.round(state.z_expectations(), 4))

# ----------------------------------------------------------------------
# 5. all-zero angles leave every qubit in |+>, so every <Z> is exactly 0
z0 = run_ansatz(cfg, np.zeros(cfg.n_qubits), np.zeros(cfg.n_params))
print("\nzero-angle readout:", z0)
