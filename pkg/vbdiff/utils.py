import csv
import os

import numpy as np


class VbdiffException(Exception):
    '''Base for every structured pipeline error.  The CLI maps these to exit code 2.'''

    pass


def format_float(value):
    '''Full double precision (17 significant digits) so CSV output round-trips exactly.'''
    return '{0:.17g}'.format(float(value))


def format_cell(value):
    if value is None:
        return ''
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)


def ensure_parent(path):
    parent = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(parent):
        os.makedirs(parent)


def write_rows(path, header, rows):
    '''Writes a header plus rows of scalars.  Line endings are fixed to "\\n" for byte-identical reruns.'''
    ensure_parent(path)
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        if header:
            writer.writerow(header)
        for row in rows:
            writer.writerow([format_cell(v) for v in row])


def read_rows(lines):
    '''Parses CSV text lines into (header, float matrix).'''
    reader = csv.reader(lines)
    header = None
    values = []
    for row in reader:
        if not row or not ''.join(row).strip():
            continue
        if header is None:
            header = [col.strip() for col in row]
            continue
        values.append([float(v) for v in row])
    if header is None:
        return [], np.empty((0, 0))
    return header, np.array(values, dtype=float).reshape(-1, len(header))
