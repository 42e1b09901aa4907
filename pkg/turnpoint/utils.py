from collections.abc import Mapping, Sequence
import collections
import csv
import hashlib
import io
import json
import logging
import re
from fractions import Fraction
from pathlib import Path

import h5py
import numpy as np

from .errors import ModeError, StructuralError

log = logging.getLogger("turnpoint")

DATA_DIR = Path(__file__).parent / "data"


class FileManager:
    """
    The files of one stage directory, ``<out>/<stage>-<digest>/``.

    Every JSON report, CSV table and HDF5 archive a stage writes goes
    through ``open``, which records the path under a label ('summary',
    'constraints', 'roots', 'values', ...) in ``artifacts``.

    Parameters
    ----------
    directory : str or Path
        The stage directory; created on the first write.
    allowed_modes : Iterable
        Modes ``open`` accepts. Exclusive creation by default; stages that
        rewrite their own content-addressed directory add 'w'.
    open_file_fn : callable
        ``open`` for text artifacts, ``h5py.File`` for the run archive.
    """

    def __init__(self, directory, allowed_modes=("x", "xt", "xb"), open_file_fn=open):
        self.directory = Path(directory)
        self._paths = set()
        self._artifacts = collections.defaultdict(list)
        self._open_file_fn = open_file_fn
        self._files = []
        self._allowed_modes = set(allowed_modes)

    @property
    def artifacts(self):
        "Label to the list of paths written under it."
        return dict(self._artifacts)

    def _stage_path(self, label, relative_path):
        if Path(relative_path).is_absolute():
            raise StructuralError(f"artifact paths are relative to the stage directory, got {relative_path!r}")
        path = (self.directory / Path(relative_path)).expanduser().resolve()
        if path in self._paths:
            raise StructuralError(f"{relative_path!r} was already written by this stage")
        self._paths.add(path)
        self._artifacts[label].append(path)
        return path

    def open(self, label, relative_path, mode, **open_file_kwargs):
        """
        Handle on ``relative_path`` inside the stage directory, recorded
        under ``label``. Each path may be opened once.
        """
        if mode not in self._allowed_modes:
            raise ModeError(f"mode {mode!r} is not one of {sorted(self._allowed_modes)}")
        path = self._stage_path(label, relative_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        f = self._open_file_fn(path, mode=mode, **open_file_kwargs)
        self._files.append(f)
        return f

    def write_json(self, label, relative_path, mapping, mode="x"):
        with self.open(label, relative_path, mode, newline="\n") as f:
            f.write(canonical_json(mapping))
        log.debug("wrote %s", relative_path)

    def write_csv(self, label, relative_path, header, rows, mode="x"):
        with self.open(label, relative_path, mode, newline="") as f:
            f.write(csv_text(header, rows))
        log.debug("wrote %s (%s rows)", relative_path, len(rows))

    def close(self):
        for f in self._files:
            f.close()

    def __enter__(self):
        return self

    def __exit__(self, *exception_details):
        self.close()


def to_jsonable(value):
    """
    Convert numpy scalars, complex numbers, Fractions and tuples into plain
    JSON types. Complex numbers become ``[re, im]``, Fractions ``"p/q"``.
    """
    if isinstance(value, Mapping):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if np.isnan(value) or np.isinf(value):
            return repr(value)
        return value
    return value


def canonical_json(mapping):
    return json.dumps(to_jsonable(mapping), indent=2, sort_keys=True) + "\n"


def content_digest(*parts):
    """
    First 16 hex digits of a SHA-256 over the canonical JSON of ``parts``.
    """
    payload = json.dumps(to_jsonable(list(parts)), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def csv_text(header, rows):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return buffer.getvalue()


def read_csv(path):
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        rows = [row for row in reader]
    return header, rows


def parse_rational(value):
    """
    Parse ``"p/q"`` strings, ints and decimal strings into a Fraction.
    Floats are accepted through their decimal repr so ``5.9`` means 59/10.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise StructuralError(f"cannot interpret {value!r} as a rational")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as err:
            raise StructuralError(f"cannot interpret {value!r} as a rational") from err
    raise StructuralError(f"cannot interpret {value!r} as a rational")


def parse_complex(value):
    """
    ``[re, im]`` pairs, plain numbers, or strings such as ``"0.05+0.01j"``.
    """
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise StructuralError(f"complex numbers are [re, im] pairs, got {value!r}")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        try:
            return complex(value.replace(" ", ""))
        except ValueError as err:
            raise StructuralError(f"cannot interpret {value!r} as a complex number") from err
    if isinstance(value, (int, float, complex, np.number)):
        return complex(value)
    raise StructuralError(f"cannot interpret {value!r} as a complex number")


_override_re = re.compile(
    r"^(?P<all_keys>[A-Za-z_]\w*(\.\w+)*)"
    r"=(?P<value>.*)$"
)


def _parse_override(override):
    """
    params.chi=5.9 :
        keys:  ("params", "chi")
        value: 5.9

    solver.n_r=80
        keys:  ("solver", "n_r")
        value: 80
    """
    m = _override_re.match(override)
    if m is None:
        raise StructuralError(f"failed to parse override '{override}'")
    keys = tuple(m.group("all_keys").split("."))
    raw_value = m.group("value")
    try:
        value = json.loads(raw_value)
    except json.JSONDecodeError:
        value = raw_value
    return keys, value


def apply_overrides(config, overrides):
    """
    Return a copy of ``config`` with each ``KEY=VALUE`` dot-path assignment
    applied. Intermediate mappings are created when missing.
    """
    config = json.loads(json.dumps(config))
    for override in overrides or ():
        keys, value = _parse_override(override)
        target = config
        for key in keys[:-1]:
            target = target.setdefault(key, {})
            if not isinstance(target, dict):
                raise StructuralError(f"override {override!r} descends into a non-mapping")
        target[keys[-1]] = value
    return config


def resolve_data_path(path):
    """
    Existing paths are returned unchanged; bare names fall back to the
    package data directory.
    """
    path = Path(path)
    if path.exists():
        return path
    candidate = DATA_DIR / path.name
    if candidate.exists():
        return candidate
    raise FileNotFoundError(f"no such configuration file: {str(path)!r}")


def copy_mapping_to_h5(a_mapping, h5_group):
    """
    Recursively reproduce a python "mapping" (typically a report dict)
    as h5 nested groups and datasets.
    """
    for key, value in a_mapping.items():
        key = str(key)
        if isinstance(value, Mapping):
            group = h5_group.create_group(key)
            log.debug("created h5 group %s", group)
            copy_mapping_to_h5(a_mapping=value, h5_group=group)
            continue
        if value is None:
            value = "None"
        value = to_jsonable(value)

        # string datasets must be converted explicitly with h5py.string_dtype()
        try:
            if isinstance(value, str) or (
                isinstance(value, Sequence)
                and len(value) > 0
                and all(isinstance(x, str) for x in value)
            ):
                d = h5_group.create_dataset(
                    name=key, data=np.array(value, dtype=h5py.string_dtype())
                )
            else:
                d = h5_group.create_dataset(name=key, data=value)
        except (TypeError, ValueError) as err:
            # ragged lists and mixed types land here
            log.info(
                "handling exception '%s' by JSON-encoding value '%s' for key '%s'",
                err,
                value,
                key,
            )
            d = h5_group.create_dataset(
                name=key,
                data=np.array(json.dumps(value), dtype=h5py.string_dtype()),
            )
        except BaseException as ex:
            log.error(
                "failed to create dataset in group '%s' for key '%s' with value '%s'",
                h5_group,
                key,
                value,
            )
            log.exception(ex)
            raise ex

        log.debug("created dataset %s", d)


class RunArchive:
    """
    HDF5 mirror of the JSON reports of one run, one group per stage.

    Parameters
    ----------
    directory : str or Path
        The directory to create the archive in.
    file_name : str
        Relative file path of the archive.

    Attributes
    ----------
    artifacts
        dict mapping the 'labels' to lists of file names
    """

    def __init__(self, directory, file_name="archive.h5"):
        self.log = logging.getLogger("turnpoint")
        self._manager = FileManager(
            directory=directory, allowed_modes={"w"}, open_file_fn=h5py.File
        )
        self._h5_output_file = self._manager.open("archive", file_name, "w")

    @property
    def artifacts(self):
        return self._manager.artifacts

    def add(self, name, mapping):
        group = self._h5_output_file.require_group(name)
        copy_mapping_to_h5(a_mapping=mapping, h5_group=group)
        self.log.info("archived %s", name)

    def close(self):
        """
        Close the archive file.
        """
        self._manager.close()

    def __enter__(self):
        return self

    def __exit__(self, *exception_details):
        self.close()
