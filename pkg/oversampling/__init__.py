from .counterfactual_engine import cfa_oversample, compute_cf_set
from .dataset import Binarization, Dataset, binarize, load_csv
from .resamplers import resample
from .resampling import Method, ResamplePlan
