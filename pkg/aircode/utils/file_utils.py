"""Supplies functions for loading and storing files, packaged resources and run outputs."""
import hashlib
import importlib.resources
import json
import os
from pathlib import Path
from typing import Dict, Union

PathLike = Union[str, Path]


def store_file(data: Union[str, bytes], file_name: str, dir_path: PathLike, do_overwrite: bool = True) -> str:
    """Store text or binary content, creating dir_path if needed.
    Args:
        data: Content to store, written in binary mode for bytes.
        file_name: Name of the file to store.
        dir_path: Path to the directory to store the file to.
        do_overwrite: Determines if existing file should be overwritten. Default: True
    Returns:
        The path to the stored file.
    """
    if not os.path.exists(dir_path):
        os.makedirs(dir_path)

    fp = os.path.join(dir_path, file_name)
    if not do_overwrite and os.path.exists(fp):
        raise FileExistsError(fp)

    if isinstance(data, (bytes, bytearray)):
        with open(fp, "wb") as f:
            f.write(data)
    else:
        with open(fp, "w", encoding="utf-8", newline="\n") as f:
            f.write(data)
    return fp


def store_json(data, file_name: str, dir_path: PathLike, *, ensure_ascii: bool = False, indent: int = 2) -> str:
    if not os.path.exists(dir_path):
        os.makedirs(dir_path)
    file_path = os.path.join(dir_path, file_name)
    with open(file_path, "w", encoding='utf-8', newline="\n") as f:
        json.dump(data, f, ensure_ascii=ensure_ascii, indent=indent, sort_keys=True)
        f.write("\n")
    return file_path


def load_json(file_path: PathLike) -> Dict:
    """
    Load a JSON file.
    Args:
        file_path: The path to the JSON file.
    Returns:
        The JSON file content as dict.
    """
    file_path = str(file_path)
    file_ending = ".json"
    if not file_path.endswith(file_ending):
        file_path = file_path + file_ending
    with open(file_path, encoding='utf8') as f:
        data = json.load(f)
    return data


def load_packaged_file(file_path: str) -> str:
    """
    Loads a file within the aircode package.
    :param file_path: The path to the file within the aircode package (without the 'aircode/' prefix).
    :return: The file content
    """
    with importlib.resources.files("aircode").joinpath(file_path).open("r") as f:
        return f.read()


def load_packaged_json(file_path: str) -> Dict:
    return json.loads(load_packaged_file(file_path))


def file_digest(file_path: PathLike) -> str:
    """The sha256 hex digest of a file's bytes."""
    sha = hashlib.sha256()
    with open(file_path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            sha.update(chunk)
    return sha.hexdigest()
