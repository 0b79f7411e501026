"""Material samples on disk, the packaged fixture material and synthetic sample generation."""
import logging
import os
from typing import Dict, Optional, Tuple

import numpy as np
import pandas as pd
from scipy import optimize

from aircode.errors import FormatError, InvalidInputError
from aircode.scatter.hankel import inverse_hankel
from aircode.scatter.kubelka_munk import KmConstants, MaterialSample, slab_profiles, transmissive_albedo
from aircode.scatter.profiles import RadialProfile, frequency_grid, radial_grid
from aircode.utils.file_utils import PathLike, load_json, load_packaged_json

module_logger = logging.getLogger(__name__)

CSV_HEADER = ["r_mm", "R", "T"]
FIXTURE_PATH = "resources/fixture_material.json"


def km_model(freqs: np.ndarray, s0: float, ell: float, k0: float, diffusion: float, name: str = None) -> KmConstants:
    """Smooth model constants S(q) = s0 exp(-(ell q)^2) and K(q) = k0 + diffusion q^2."""
    freqs = np.asarray(freqs, dtype=float)
    return KmConstants(freqs, s0 * np.exp(-(ell * freqs) ** 2), k0 + diffusion * freqs ** 2, name=name)


def calibrate_absorption(s0: float, thickness: float, albedo: float) -> float:
    """The base absorption k0 for which a slab of the given thickness transmits 'albedo' at q = 0."""
    q0 = np.zeros(1)

    def excess(k0: float) -> float:
        km = KmConstants(q0, np.array([s0]), np.array([k0]))
        return transmissive_albedo(km, thickness) - albedo

    lo, hi = 0.0, 10.0
    if excess(lo) < 0:
        raise InvalidInputError(f"A non-absorbing slab of {thickness} mm transmits less than {albedo}",
                                key="calibration")
    return float(optimize.brentq(excess, lo, hi, xtol=1e-14))


def material_from_spec(spec: Dict, freqs: Optional[np.ndarray] = None) -> KmConstants:
    """
    Build constants from a material description: either tabulated constants (freqs_per_mm, ...)
    or the parameters of the smooth model with a calibration of the base absorption.
    """
    if "scattering_per_mm" in spec:
        return KmConstants.from_dict(spec)
    freqs = frequency_grid() if freqs is None else freqs
    try:
        s0 = float(spec["s0_per_mm"])
        ell = float(spec["ell_mm"])
        diffusion = float(spec["diffusion_mm"])
        if "k0_per_mm" in spec:
            k0 = float(spec["k0_per_mm"])
        else:
            calibration = spec["calibration"]
            k0 = calibrate_absorption(s0, float(calibration["thickness_mm"]), float(calibration["albedo"]))
    except KeyError as e:
        raise FormatError(f"Material description misses {e}", key=str(e))
    module_logger.info("Material '%s': s0=%.4f/mm, k0=%.6f/mm", spec.get("name"), s0, k0)
    return km_model(freqs, s0, ell, k0, diffusion, name=spec.get("name"))


def load_fixture_material(freqs: Optional[np.ndarray] = None, path: str = FIXTURE_PATH) -> KmConstants:
    """
    The synthetic material used when no measured material is given. path names a file, or a resource
    packaged with aircode if no such file exists.
    """
    if os.path.isfile(path):
        return material_from_spec(load_json(path), freqs)
    try:
        spec = load_packaged_json(path)
    except FileNotFoundError:
        raise InvalidInputError(f"Fixture material not found: {path}", key="fixture")
    return material_from_spec(spec, freqs)


def load_material(path: PathLike, freqs: Optional[np.ndarray] = None) -> KmConstants:
    if not os.path.exists(path):
        raise InvalidInputError(f"Material file not found: {path}", key="material")
    return material_from_spec(load_json(path), freqs)


def synthesize_sample(km: KmConstants, thickness: float, radii: Optional[np.ndarray] = None,
                      name: str = "synthetic") -> MaterialSample:
    """The spatial profiles a measurement of a slab of the given thickness would yield."""
    radii = radial_grid() if radii is None else radii
    slab = slab_profiles(km, thickness)
    return MaterialSample(thickness,
                          inverse_hankel(slab.refl, km.freqs, radii),
                          inverse_hankel(slab.trans, km.freqs, radii),
                          name=name)


def _first_problem(problems) -> Optional[Tuple[int, str, str]]:
    """The earliest file row flagged by any of the (mask, key, message) checks, earlier checks winning ties."""
    first = None
    for mask, key, message in problems:
        rows = mask.index[mask.to_numpy(dtype=bool)]
        if len(rows) and (first is None or rows[0] < first[0]):
            first = (int(rows[0]), key, message)
    return first


def read_sample_csv(path: PathLike, thickness: float, name: str = None) -> MaterialSample:
    """
    Read measured profiles from a CSV file with the header 'r_mm,R,T'.

    Radii must start at 0 and increase strictly; values must be finite and nonnegative.
    Violations raise a FormatError naming the row (1-based, header is row 1).
    """
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, skip_blank_lines=False, skipinitialspace=True,
                         index_col=False)
    except pd.errors.EmptyDataError:
        raise FormatError(f"Empty material file: {path}", key="header", row=1)
    except pd.errors.ParserError as e:
        raise FormatError(f"Malformed material file {path}: {e}", key="columns")
    header = [str(column).strip() for column in df.columns]
    if header != CSV_HEADER:
        raise FormatError(f"Expected header {','.join(CSV_HEADER)}, got {','.join(header)}", key="header", row=1)
    df.columns = CSV_HEADER
    df.index = np.arange(2, len(df) + 2)
    cells = df.fillna("").apply(lambda column: column.str.strip())
    cells = cells[(cells != "").any(axis=1)]

    values = cells.apply(pd.to_numeric, errors="coerce")
    radii = values["r_mm"]
    step = radii.diff()
    starts_off_zero = pd.Series(False, index=radii.index)
    if len(radii):
        starts_off_zero.iloc[0] = radii.iloc[0] != 0.0
    problem = _first_problem([
        ((cells == "").any(axis=1), "columns", "Expected 3 columns"),
        (values.isna().any(axis=1), "value", "Non-numeric entry"),
        (~np.isfinite(values).all(axis=1), "value", "Non-finite entry"),
        ((values[["R", "T"]] < 0).any(axis=1), "value", "Negative profile value"),
        (starts_off_zero, "radius", "Radii must start at 0"),
        (step == 0, "radius", "Duplicate radius"),
        (step < 0, "radius", "Radius is not ascending"),
    ])
    if problem is not None:
        row, key, message = problem
        raise FormatError(f"{message} in {','.join(cells.loc[row])}", key=key, row=row)
    if len(values) < 2:
        raise FormatError(f"Material file {path} holds fewer than two samples", key="rows")
    grid = radii.to_numpy(dtype=float)
    return MaterialSample(thickness,
                          RadialProfile(grid, values["R"].to_numpy(dtype=float)),
                          RadialProfile(grid, values["T"].to_numpy(dtype=float)),
                          name=name or os.path.splitext(os.path.basename(str(path)))[0])


def write_sample_csv(sample: MaterialSample, path: PathLike) -> str:
    dir_path = os.path.dirname(str(path))
    if dir_path and not os.path.exists(dir_path):
        os.makedirs(dir_path)
    df = pd.DataFrame({"r_mm": sample.radii, "R": sample.refl_profile.values, "T": sample.trans_profile.values})
    df.to_csv(path, index=False, lineterminator="\n", float_format="%.12e", columns=CSV_HEADER)
    return str(path)
