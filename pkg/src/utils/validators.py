"""
Data Validators
Validation functions for model parameters and experiment documents
"""

from typing import Dict, Any, List, Tuple
import math


# Valid options
EXCITATION_PRESETS = ['interface', 'first', 'both_ends', 'uniform']

DRIVE_PRESETS = ['interface', 'first', 'both_ends', 'uniform']

COMMANDS = ['spectrum', 'sweep', 'evolve', 'scan']

OUTPUT_FORMATS = ['csv', 'csv+svg']

MAX_CELLS = 200


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def validate_real(value: Any, name: str) -> Tuple[bool, str]:
    """Validate a finite real number."""
    if value is None:
        return False, f"{name} is required"

    if not _is_number(value):
        return False, f"{name} must be a number"

    if not math.isfinite(value):
        return False, f"{name} must be finite"

    return True, ""


def validate_positive(value: Any, name: str) -> Tuple[bool, str]:
    """Validate a finite number strictly greater than zero."""
    is_valid, error = validate_real(value, name)
    if not is_valid:
        return is_valid, error

    if value <= 0:
        return False, f"{name} must be > 0"

    return True, ""


def validate_non_negative(value: Any, name: str) -> Tuple[bool, str]:
    """Validate a finite number >= 0."""
    is_valid, error = validate_real(value, name)
    if not is_valid:
        return is_valid, error

    if value < 0:
        return False, f"{name} must be >= 0"

    return True, ""


def validate_cells(value: Any, name: str = 'cells_per_chain') -> Tuple[bool, str]:
    """Validate the number of unit cells per chain."""
    if value is None:
        return False, f"{name} is required"

    if not isinstance(value, int) or isinstance(value, bool):
        return False, f"{name} must be an integer"

    if value < 1:
        return False, f"{name} must be >= 1"

    if value > MAX_CELLS:
        return False, f"{name} must be <= {MAX_CELLS}"

    return True, ""


def validate_site(site: Any, total_sites: int, name: str = 'site') -> Tuple[bool, str]:
    """Validate a global site index against the layout size."""
    if not isinstance(site, int) or isinstance(site, bool):
        return False, f"{name} must be an integer"

    if site < 0 or site >= total_sites:
        return False, f"{name} {site} out of range [0, {total_sites})"

    return True, ""


def validate_choice(value: Any, options: List[str], name: str) -> Tuple[bool, str]:
    """Validate a selection among a fixed list of options."""
    if value not in options:
        return False, f"{name} must be one of: {', '.join(options)}"

    return True, ""


def validate_increasing_grid(grid: List[float], name: str = 'grid') -> Tuple[bool, str]:
    """Validate a nonempty, finite, strictly increasing grid."""
    if grid is None or len(grid) == 0:
        return False, f"{name} must be nonempty"

    for value in grid:
        if not math.isfinite(value):
            return False, f"{name} must contain finite values"

    for left, right in zip(grid[:-1], grid[1:]):
        if right <= left:
            return False, f"{name} must be strictly increasing"

    return True, ""


def validate_range_block(data: Dict[str, Any], prefix: str, positive_step: bool = True) -> List[str]:
    """
    Validate a {start, stop, step} block.
    Returns the list of errors (empty when valid).
    """
    errors = []

    validations = [
        validate_real(data.get('start'), f"{prefix}.start"),
        validate_real(data.get('stop'), f"{prefix}.stop"),
        validate_positive(data.get('step'), f"{prefix}.step") if positive_step
        else validate_real(data.get('step'), f"{prefix}.step"),
    ]

    for is_valid, error in validations:
        if not is_valid:
            errors.append(error)

    if not errors and data['stop'] < data['start']:
        errors.append(f"{prefix}.stop must be >= {prefix}.start")

    return errors


def validate_model_data(data: Dict[str, Any], prefix: str = 'model') -> Tuple[bool, List[str]]:
    """
    Validate complete model parameters.
    Returns (is_valid, list_of_errors).
    """
    errors = []

    # Validate each field
    validations = [
        validate_positive(data.get('t1'), f"{prefix}.t1"),
        validate_real(data.get('t2'), f"{prefix}.t2"),
        validate_real(data.get('delta'), f"{prefix}.delta"),
        validate_cells(data.get('cells_per_chain'), f"{prefix}.cells_per_chain"),
    ]

    for is_valid, error in validations:
        if not is_valid:
            errors.append(error)

    return len(errors) == 0, errors


def validate_defect_row(row: Dict[str, Any], row_number: int, total_sites: int) -> Tuple[bool, List[str]]:
    """
    Validate one entry of the defects list.
    Returns (is_valid, list_of_errors_with_key_path).
    """
    prefix = f"defects[{row_number}]"
    errors = []

    is_valid, error = validate_site(row.get('site'), total_sites, f"{prefix}.site")
    if not is_valid:
        errors.append(error)

    is_valid, error = validate_real(row.get('strength'), f"{prefix}.strength")
    if not is_valid:
        errors.append(error)

    return len(errors) == 0, errors
