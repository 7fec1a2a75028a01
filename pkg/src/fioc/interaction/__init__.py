from .metrics import nshd
from .pairwise import pairwise_embed, pairwise_embed_backward
from .variational import (
    EDGE_CLASS,
    P_EDGE_DEFAULT,
    TAU_DEFAULT,
    VariationalMask,
    harden,
    make_variational,
    mask_elbo_backward,
    mask_elbo_terms,
    soft_graph,
    soft_graph_backward,
    variational_params,
)
from .codebook import (
    COMMITMENT_WEIGHT,
    Codebook,
    codebook_params,
    decode_backward,
    decode_code_to_graph,
    make_codebook,
    pool_embeddings,
    quantize,
    quantize_backward,
)
from .cit import (
    CIT_SIGMA_FLOOR,
    CIT_THRESHOLD_DEFAULT,
    CitModels,
    GaussianRegressor,
    cmi_score,
    fit_cit_models,
    fit_regressor,
    infer_graph_cit,
    pointwise_ratios,
)
# evaluate/gtlatent sit above the wm package; import them explicitly as
# fioc.interaction.evaluate / fioc.interaction.gtlatent to avoid an import
# cycle with fioc.wm.model (which uses the leaf regimes above).
