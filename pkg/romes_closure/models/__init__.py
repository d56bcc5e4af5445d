from .subspaces import (
    Metric,
    SubspaceSet,
    ErrorCoordinates,
    build_metric,
    pod,
    pod_euclidean,
    build_out_of_plane_basis,
    build_subspaces,
    project_in_plane,
    error_generalized_coordinates,
)
from .rom import RomSolution, solve_rom, rom_qoi
from .duals import (
    DualBasis,
    IndicatorVector,
    DualRomSolution,
    solve_dual_fom,
    solve_dual_fom_all,
    build_dual_reduced_basis,
    solve_dual_rom,
    compute_indicators,
)
from .gpr import (
    GpHyperparameters,
    GpErrorModel,
    kernel_matrix,
    fit_beta_mle,
    posterior,
    prediction_interval,
    hyperparameter_grid,
    cross_validate,
)
from .romes import (
    FomCache,
    OfflinePackage,
    OfflineTrainer,
    StatisticalStateModel,
    QoiModelSample,
    build_state_model,
    offline_train,
    online_predict,
    predict_online,
)
