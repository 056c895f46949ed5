"""
This module defines the checkpoint file: magic bytes "HSEQ", a u32 format
version, then one record per parameter (u32 name length, UTF-8 name, u32 rank,
u32 extents, float32 values in row-major order), all little-endian. A JSON
sidecar next to the checkpoint carries the network description and the
vocabularies.
"""

import os
import json
import struct
import collections
import numpy as np
from hseq import model
from hseq.utils import CheckpointError, md5


MAGIC = b"HSEQ"
FORMAT_VERSION = 1


def save_checkpoint(path, values):
    """
    Write parameter values

    Args:
        path (str): checkpoint path
        values (dict): name -> array, written in iteration order as float32
    """
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", FORMAT_VERSION))
        for name, value in values.items():
            encoded = name.encode("utf-8")
            array = np.asarray(value, dtype="<f4")
            f.write(struct.pack("<I", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<I", array.ndim))
            f.write(struct.pack("<{}I".format(array.ndim), *array.shape))
            f.write(array.tobytes(order="C"))


def load_checkpoint(path):
    """read a checkpoint into an ordered dict name -> float32 array"""
    if not os.path.exists(path):
        raise CheckpointError("Checkpoint {} does not exist".format(path))
    with open(path, "rb") as f:
        content = f.read()
    if content[:4] != MAGIC:
        raise CheckpointError("{} is not a hseq checkpoint".format(path))
    offset = 4

    def read(fmt):
        nonlocal offset
        size = struct.calcsize(fmt)
        if offset + size > len(content):
            raise CheckpointError("{} is truncated at byte {}".format(path, offset))
        fields = struct.unpack_from(fmt, content, offset)
        offset += size
        return fields

    version, = read("<I")
    if version != FORMAT_VERSION:
        raise CheckpointError("{} has format version {}, expected {}".format(path, version, FORMAT_VERSION))
    values = collections.OrderedDict()
    while offset < len(content):
        name_len, = read("<I")
        name = bytes(read("<{}s".format(name_len))[0]).decode("utf-8")
        rank, = read("<I")
        shape = read("<{}I".format(rank))
        count = int(np.prod(shape)) if rank else 1
        if offset + 4 * count > len(content):
            raise CheckpointError("{} is truncated inside parameter {}".format(path, name))
        values[name] = np.frombuffer(content, dtype="<f4", count=count, offset=offset).reshape(shape).copy()
        offset += 4 * count
    return values


def check_compatible(shapes, values):
    """
    Raise CheckpointError listing every missing, unexpected or mis-shaped parameter

    Args:
        shapes (dict): name -> expected shape
        values (dict): name -> array from a checkpoint
    """
    problems = []
    for name in shapes:
        if name not in values:
            problems.append("missing {}".format(name))
        elif list(values[name].shape) != list(shapes[name]):
            problems.append("{}: checkpoint shape {} vs network shape {}".format(
                name, list(values[name].shape), list(shapes[name])))
    problems.extend("unexpected {}".format(name) for name in values if name not in shapes)
    if problems:
        raise CheckpointError("Checkpoint does not match the network:\n  " + "\n  ".join(problems))


def sidecar_path(path):
    return path + ".json"


def save_model(network, path):
    """write the parameters and the JSON description of a Seq2Seq"""
    save_checkpoint(path, network.get_values())
    description = network.spec.to_dict()
    meta = {"format_version": FORMAT_VERSION, "spec": description, "spec_md5": md5(description),
            "max_src_len": network.max_src_len}
    with open(sidecar_path(path), "w", encoding="utf-8") as f:
        json.dump(meta, f, indent=4, ensure_ascii=False)
    return path


def load_spec(path):
    """NetworkSpec and metadata stored next to a checkpoint"""
    if not os.path.exists(sidecar_path(path)):
        raise CheckpointError("Checkpoint description {} does not exist".format(sidecar_path(path)))
    with open(sidecar_path(path), "r", encoding="utf-8") as f:
        meta = json.load(f)
    if md5(meta["spec"]) != meta.get("spec_md5"):
        raise CheckpointError("Checkpoint description {} does not match its md5 key".format(sidecar_path(path)))
    return model.NetworkSpec.from_dict(meta["spec"]), meta


def load_model(path, dtype="float32"):
    """rebuild a Seq2Seq from a checkpoint and its description"""
    spec, meta = load_spec(path)
    values = load_checkpoint(path)
    network = model.factory(spec, dtype=dtype, max_src_len=meta.get("max_src_len"))
    check_compatible(spec.param_shapes(), values)
    network.assign(values)
    return network


def restore(network, path):
    """assign checkpoint values to an existing network after checking names and shapes"""
    values = load_checkpoint(path)
    check_compatible(network.spec.param_shapes(), values)
    network.assign(values)
    return network
