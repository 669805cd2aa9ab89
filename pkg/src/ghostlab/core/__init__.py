from ghostlab.core.document import FieldDocumentParser, read_field, write_field_document
from ghostlab.core.field import (
    ScalarAmplitudeField,
    SpectralField,
    from_scalar,
    make_field,
    to_scalar,
)
from ghostlab.core.lattice import ModeSet, WaveVector, ball, is_eigenvalue, shell
from ghostlab.core.operators import (
    EigenforceSpec,
    apply_stokes_power,
    bilinear,
    eigenspace_project,
    inner,
    make_eigenforce,
    norm_As,
    project_shells,
    random_field,
)
