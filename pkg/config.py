"""
Central configuration for the mode-ambiguity reduction toolkit.
All tunable parameters live here; library code takes them as defaults.
"""

# ──────────────────────────────────────────────
# Geometry tolerances
# ──────────────────────────────────────────────
GEOM_TOL = 1e-9  # m, geometric predicates (on-plane, inside-edge, endpoints)
AREA_TOL = 1e-6  # m², area comparisons
SNAP_TOL = 1e-6  # m, pieces closer than this belong to one component
DEGENERATE_AREA = 1e-9  # m², boolean-op pieces below this are dropped
UNIT_NORMAL_TOL = 1e-12

# ──────────────────────────────────────────────
# Scene
# ──────────────────────────────────────────────
RECEIVER_HEIGHT = 0.0  # m above ground; the receiver sits on the ground plane
FAR_FIELD_RANGE = 1e6  # m, satellites closer than this are rejected

# ──────────────────────────────────────────────
# Shadow matching
# ──────────────────────────────────────────────
MIN_MODE_AREA = 1.0  # m², sliver suppression

# ──────────────────────────────────────────────
# SPC / mixture model
# ──────────────────────────────────────────────
MIUD_HALF_WIDTH = 0.01  # m, zero-width intervals are inflated to ±this

# ──────────────────────────────────────────────
# Inference
# ──────────────────────────────────────────────
NUM_SAMPLES = 1000  # K, range-offset samples per mixture model

# ──────────────────────────────────────────────
# Scenario simulator
# ──────────────────────────────────────────────
SIM_SEED = 42
N_BUILDINGS = 12
BUILDING_HEIGHT_RANGE = (15.0, 60.0)  # m
BUILDING_LENGTH_RANGE = (15.0, 40.0)  # m, along the street
BUILDING_DEPTH_RANGE = (12.0, 25.0)  # m, away from the street
GAP_RANGE = (4.0, 14.0)  # m, side alleys between buildings
STREET_WIDTH_RANGE = (14.0, 24.0)  # m
AOI_SIZE = 200.0  # m, street length inside the area of interest
N_SATELLITES = 8
ELEVATION_RANGE_DEG = (15.0, 80.0)
SATELLITE_RANGE = (2.0e7, 2.6e7)  # m
CLOCK_BIAS = 100.0  # m
NOISE_SIGMA = 1.0  # m
MISLABEL_RATE = 0.0
MIN_SATELLITES = 4
MAX_PLACEMENT_RETRIES = 50
MAX_TRUTH_DRAWS = 1000
MAX_EPOCH_REDRAWS = 20  # fresh receiver + constellation draws when too few satellites are tracked

# ──────────────────────────────────────────────
# Batch evaluation
# ──────────────────────────────────────────────
BATCH_EPOCHS = 200
BATCH_WORKERS = 1
CONFIDENCE_LEVEL = 0.95

# ──────────────────────────────────────────────
# Output
# ──────────────────────────────────────────────
OUTPUT_DIR = "output"
SEED_ENV_VAR = "URM_SEED"
SCENE_FILE = "scene.json"
EPOCH_DIR = "epochs"
MANIFEST_FILE = "manifest.json"
RECORDS_FILE = "records.csv"
BATCH_REPORT_FILE = "batch_report.json"
REPORT_FILE = "report.csv"
REPORT_TEXT_FILE = "report.txt"
