from .utils import (
    write_matrix_csv,
    read_matrix_csv,
    write_records_csv,
    read_records_csv,
    write_json,
    read_json,
    describe_version,
    sample_parameters,
)
from .grids import (
    coordinates_2D,
    block_index,
    gaussian_bump,
    harmonic_mean,
)
from .config import (
    ExperimentConfig,
    load_config,
    config_from_dict,
)
