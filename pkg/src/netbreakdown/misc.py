""" Miscellaneous utility functions.
"""

import numpy as np


def parse_int_list(text):
    '''
    Parse a comma separated list of integers; items can be inclusive
    ranges, i.e. 3-10

    Args:
        text: string such as "5" or "3-6,8"
    Return:
        list of int in the given order
    '''
    values = []
    for item in text.split(','):
        item = item.strip()
        if not item:
            continue
        if '-' in item:
            start = int(item.split('-')[0])
            end = int(item.split('-')[1])
            values += range(start, end + 1, 1)
        else:
            values.append(int(item))
    return values


def parse_grid(text):
    '''
    Parse a probability grid, either a comma list ("0.1,0.2") or an
    inclusive range "start:stop:step" ("0.05:0.3:0.05")

    Range values are rounded to 12 decimals so that float steps land on
    the intended points.
    '''
    text = text.strip()
    if not text:
        return []
    if ':' in text:
        parts = text.split(':')
        if len(parts) != 3:
            raise ValueError(f'Grid range must be start:stop:step, got {text!r}')
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ValueError(f'Grid step must be positive, got {step}')
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + k * step, 12) for k in range(max(count, 0))]
    return [float(item) for item in text.split(',') if item.strip()]
