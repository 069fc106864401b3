"""This module contains the laboratory's functionalities necessary to store computed results as artifact files.

Array data is written as CSV, reports as JSON. Every file starts with the tool version, the full effective run
configuration and the seed (a comment header in CSV files, a "_meta" block in JSON files), floats carry 17
significant digits in both formats, and nothing time-dependent is written, so identical runs produce
byte-identical files.

The most important functionalities include functions to
    - write a text file atomically (temporary file, then rename)
    - write a data frame as a CSV artifact with its header
    - write a record as a JSON artifact with its metadata
    - read both kinds of artifacts back
"""

import json
import logging
import math
import os
import tempfile

import numpy as np
import pandas as pd

import config

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
COMMENT = "#"


def write_atomic(path: str, text: str):
    """write a text file so that readers see either the old or the complete new content

    :param path: the path of the file ('str')
    :param text: the content ('str')
    """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    handle = tempfile.NamedTemporaryFile("w", encoding="utf-8", dir=directory, prefix=".bcspec-", delete=False,
                                         newline="\n")
    try:
        with handle:
            handle.write(text)
        os.replace(handle.name, path)
    except OSError:
        if os.path.exists(handle.name):
            os.remove(handle.name)
        raise
    logger.debug("wrote %s (%d characters)", path, len(text))


def jsonable(value):
    """convert a value into plain JSON types: numpy scalars and arrays become numbers and lists, complex numbers
    become [re, im] and non-finite floats become the strings "inf", "-inf" and "nan"

    :param value: the value ('object')
    :return: the converted value ('object')
    """
    if isinstance(value, dict):
        return {str(key): jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [jsonable(item) for item in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [jsonable(value.real), jsonable(value.imag)]
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else str(value)
    return value


def format_float(value: float):
    """return the 17-significant-digit text of a finite float, keeping a decimal point or an exponent

    :param value: the number ('float')
    :return: the text ('str')
    """
    if not math.isfinite(value):
        raise ValueError(f"Non-finite float {value!r} has no JSON number representation.")
    text = FLOAT_FORMAT % value
    return text if any(mark in text for mark in ".e") else text + ".0"


class FloatEncoder(json.JSONEncoder):
    """JSON encoder that writes floats with 17 significant digits, like the CSV artifacts"""

    def iterencode(self, o, _one_shot=False):
        indent = " " * self.indent if isinstance(self.indent, int) else self.indent
        encoder = json.encoder.encode_basestring_ascii if self.ensure_ascii else json.encoder.encode_basestring
        markers = {} if self.check_circular else None
        return json.encoder._make_iterencode(markers, self.default, encoder, indent, format_float,
                                             self.key_separator, self.item_separator, self.sort_keys,
                                             self.skipkeys, False)(o, 0)


def header(run_config, seed=None):
    """return the metadata block of an artifact

    :param run_config: the effective configuration ('config.RunConfig')
    :param seed: the seed used, if any ('int')
    :return: the tool version, the configuration and the seed ('dict')
    """
    return {"tool": "bcspec", "version": config.__version__, "config": jsonable(run_config.to_dict()), "seed": seed}


def write_csv(frame, path: str, run_config, seed=None):
    """write a data frame as a CSV artifact headed by comment lines

    :param frame: the table ('pandas.core.frame.DataFrame')
    :param path: the path of the file ('str')
    :param run_config: the effective configuration ('config.RunConfig')
    :param seed: the seed used, if any ('int')
    :return: the path ('str')
    """
    meta = header(run_config, seed)
    lines = [f"{COMMENT} {meta['tool']} {meta['version']}",
             f"{COMMENT} config: {json.dumps(meta['config'], sort_keys=True)}",
             f"{COMMENT} seed: {json.dumps(seed)}"]
    body = frame.to_csv(index=False, float_format=FLOAT_FORMAT)
    write_atomic(path, "\n".join(lines) + "\n" + body)
    logger.info("wrote table with %d row(s) to %s", len(frame), path)
    return path


def write_json(record: dict, path: str, run_config, seed=None):
    """write a record as a JSON artifact with a "_meta" block

    :param record: the report ('dict')
    :param path: the path of the file ('str')
    :param run_config: the effective configuration ('config.RunConfig')
    :param seed: the seed used, if any ('int')
    :return: the path ('str')
    """
    document = dict(jsonable(record), _meta=header(run_config, seed))
    write_atomic(path, json.dumps(document, indent=2, sort_keys=True, cls=FloatEncoder) + "\n")
    logger.info("wrote report to %s", path)
    return path


def read_csv(path: str):
    """read a CSV artifact without its header ('pandas.core.frame.DataFrame')"""
    return pd.read_csv(path, comment=COMMENT, float_precision="round_trip")


def read_json(path: str):
    """read a JSON artifact including its "_meta" block ('dict')"""
    with open(path, encoding="utf-8") as handle:
        return json.load(handle)
