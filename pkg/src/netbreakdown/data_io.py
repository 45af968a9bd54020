""" Read and write graph fixtures and result tables.
"""

import gzip
import io
import math
import os
import sys

import numpy as np
import pandas as pd

from .ensemble import MultiGraph


def read_graph(path):
    '''
    Read a multigraph in edge-list format ("n m", then one "u v" per edge).

    Args:
        path: file name, gzip compressed if it ends with .gz
    Return:
        MultiGraph
    '''
    path = os.path.normpath(path)
    if path.endswith('.gz'):
        with gzip.open(path, 'rt') as f:
            text = f.read()
    else:
        with open(path, 'r') as f:
            text = f.read()
    return MultiGraph.from_edge_list(text)


def write_graph(graph, path):
    """ Write `graph` in edge-list format (gzip if path ends with .gz) """
    text = graph.to_edge_list()
    if path.endswith('.gz'):
        with gzip.open(path, 'wt') as f:
            f.write(text)
    else:
        with open(path, 'w') as f:
            f.write(text)


def format_value(value):
    """
    Text form of a table cell: 17 significant digits for reals, 'NA' for
    missing values.
    """
    if value is None:
        return 'NA'
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return 'NA'
    return format(value, '.17g')


def format_frame(frame, repr_columns=('epsilon',)):
    """
    Convert every cell of `frame` to text.

    Columns listed in `repr_columns` use repr(float), so grid points print
    as typed (1.0, 0.05); all others go through `format_value`.
    """
    out = pd.DataFrame(index=frame.index)
    for col in frame.columns:
        if col in repr_columns:
            out[col] = [repr(float(v)) for v in frame[col]]
        else:
            out[col] = [format_value(v) for v in frame[col]]
    return out


def write_table(out, header, frame):
    '''
    Write a CSV table preceded by "# key: value" comment lines.

    Args:
        out: output path, '-' for stdout
        header: dict of run metadata, written in insertion order
        frame: pandas DataFrame, written as text via format_frame
    '''
    buffer = io.StringIO()
    for key, value in header.items():
        buffer.write(f'# {key}: {value}\n')
    format_frame(frame).to_csv(buffer, index=False)
    text = buffer.getvalue().replace('\r\n', '\n')
    if out == '-':
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(out, 'w') as f:
            f.write(text)


def read_table(path):
    '''
    Read a table written by write_table.

    Return:
        (header dict of strings, pandas DataFrame)
    '''
    header = {}
    with open(path, 'r') as f:
        lines = f.readlines()
    body = []
    for line in lines:
        if line.startswith('#'):
            key, _, value = line[1:].partition(':')
            header[key.strip()] = value.strip()
        else:
            body.append(line)
    if len(body) == 0:
        return header, pd.DataFrame()
    frame = pd.read_csv(io.StringIO(''.join(body)), na_values=['NA'])
    return header, frame
