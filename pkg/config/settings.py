# Centralized numerical defaults shared by the tube, trainer, verifier, controller and simulator.

# Network
DEFAULT_HIDDEN = (64, 64, 64)
MODEL_MAGIC = b"PNST"
MODEL_VERSION = 1

# Loss weights (physics hinge terms, boundary MSE terms)
DEFAULT_PHYS_WEIGHT = 1.0
DEFAULT_BOUNDARY_WEIGHT = 10.0
TRAIN_HINGE_MARGIN = 1e-3
TRAIN_RATE_MARGIN = 0.05        # derivative hinges trained at (1 - margin) * budget

# Training
DEFAULT_LEARNING_RATE = 1e-3
DEFAULT_MAX_EPOCHS = 20000
DEFAULT_TOLERANCE = 1e-4
EPSILON_FRACTION = 1.0 / 200.0   # eps = t_c * EPSILON_FRACTION
LIPSCHITZ_BUDGET_FACTOR = 4.0

# Adam
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

# Verification
BOUNDARY_TOLERANCE = 1e-2
POWER_ITERATIONS = 50
POWER_SAFETY_FACTOR = 1.01
AUDIT_REFINEMENT = 10           # dense audit step = eps / AUDIT_REFINEMENT

# Controller
CLAMP_DELTA = 1e-6
FUNNEL_Q = 0.1
FUNNEL_P_SCALE = 1.25
DEFAULT_GAIN = 1.0

# Simulation
DEFAULT_STEP_FRACTION = 1e-3    # h = t_c * DEFAULT_STEP_FRACTION
DEFAULT_W_MAX = 0.1
CSV_FLOAT_FORMAT = "%.17g"
