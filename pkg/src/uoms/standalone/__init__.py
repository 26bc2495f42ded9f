from .cluster import INDICES, ORIENTATION, ScoreSplit, cluster_index, cluster_indices, split_by_top_k
from .ireos import (
    IreosConfig,
    SeparabilityTable,
    find_gamma_max,
    ireos,
    ireos_index,
    kriegel_weights,
    separability,
    separability_matrix,
)
from .levelset import em_curve, em_inverse, excess_mass, mass_volume, uniform_normality
