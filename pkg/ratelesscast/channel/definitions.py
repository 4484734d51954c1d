########################
### Channel models
########################

MODE_IID = "iid_rayleigh"
MODE_AR1 = "ar1_rayleigh"
# |h|^2 equals the receiver's variance every slot, the report is exact
MODE_STATIC = "static"
# |h|^2 drawn from a finite set of atoms, the report is exact with probability rho
MODE_DISCRETE = "discrete"
MODES = (MODE_IID, MODE_AR1, MODE_STATIC, MODE_DISCRETE)

# Upper bound of the mutual information (bits/symbol), RF front end dynamic range
DEFAULT_I_MAX = 5.0
DEFAULT_SYMBOLS_PER_SLOT = 1
# h[t+1] = sqrt(a) h[t] + sqrt(1 - a) n[t]
DEFAULT_AR_COEFF = 0.1
DEFAULT_QUANT_BINS = 4

########################
### Quadrature
########################

# Gauss-Legendre nodes over the Rician magnitude of h given hhat
QUAD_NODES = 256
# Gauss-Legendre nodes over |hhat| inside one CSI bin
BIN_NODES = 32
# Half width of the integration window around the Rician mean, in std devs
TAIL_SIGMAS = 12.0

########################
### Fixed-rate baseline
########################

# Rate grid 0 .. I_max * K in this many steps
RATE_GRID_STEPS = 256
# Equiprobable cells of the report power |hhat|^2 / variance, continuous channels
FIXED_RATE_CELLS = 256

########################
### Sampling
########################

# Slots drawn per call when the engine pre-samples the channel
BLOCK_SLOTS = 1024
