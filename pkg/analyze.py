"""This module contains the laboratory's functionalities necessary to turn computed results into tables.

Every tabular artifact (spectra, eigenfunctions, edge scans, kernels, trajectories, momentum audits and
convergence studies) is a pandas data frame with fixed column names, so that the command line interface can
print them and the storage module can write them without knowing where they came from.

The most important functionalities include functions to
    - tabulate a spectrum and its eigenfunctions
    - tabulate edge-state scans and finite-difference convergence studies
    - tabulate heat kernels on a grid or along a row
    - tabulate classical trajectories and their momentum audit
    - summarize a record (e.g. a representability report) as a two-column table
"""

import math

import numpy as np
import pandas as pd

SPECTRUM_COLUMNS = ["index", "E", "multiplicity"]
EIGENFUNCTION_COLUMNS = ["x", "re_psi", "im_psi"]
EDGE_COLUMNS = ["t", "E_edge_1", "E_edge_2", "n_negative", "E_tan2"]
CONVERGENCE_COLUMNS = ["N", "h", "E_fd", "error", "order"]
KERNEL_COLUMNS = ["x", "y", "re_K", "im_K"]
KERNEL_ROW_COLUMNS = ["x", "y", "re_K", "im_K", "stderr"]
TRAJECTORY_COLUMNS = ["t", "x", "y", "vx", "vy", "event"]
AUDIT_COLUMNS = ["bounce", "t", "rho", "normal_ratio", "tangential_ratio", "rotation", "kinetic_in", "kinetic_out",
                 "loss_factor"]


def spectrum_frame(solution):
    """tabulate the levels of a spectrum

    :param solution: the levels ('spectral.EigenSolution')
    :return: a data frame with one row per level, indexed from 1 ('pandas.core.frame.DataFrame')
    """
    rows = [(number, level.energy, level.multiplicity) for number, level in enumerate(solution, start=1)]
    return pd.DataFrame(rows, columns=SPECTRUM_COLUMNS)


def eigenfunction_frame(grid, samples):
    """tabulate one sampled eigenfunction

    :param grid: the sample points ('numpy.ndarray')
    :param samples: the complex values ψ(x) ('numpy.ndarray')
    :return: a data frame with the columns x, re_psi and im_psi ('pandas.core.frame.DataFrame')
    """
    samples = np.asarray(samples)
    return pd.DataFrame({"x": grid, "re_psi": samples.real, "im_psi": samples.imag}, columns=EIGENFUNCTION_COLUMNS)


def edge_frame(rows: list):
    """tabulate an edge-state scan

    :param rows: pairs of a phase t and the sorted negative levels of U·e^{it} ('list')
    :return: a data frame with up to two edge levels per t (NaN where absent) and E·tan²(t/2) of the lowest
             level, which tends to -1 as t → 0 ('pandas.core.frame.DataFrame')
    """
    table = []
    for t, energies in rows:
        first = energies[0] if len(energies) > 0 else math.nan
        second = energies[1] if len(energies) > 1 else math.nan
        table.append((t, first, second, len(energies), first * math.tan(t / 2.0) ** 2))
    return pd.DataFrame(table, columns=EDGE_COLUMNS)


def convergence_frame(rows: list):
    """tabulate a convergence study and add the observed order between consecutive grid sizes

    :param rows: dictionaries with the keys N, h, E_fd and error ('list')
    :return: a data frame with the observed order log(e₁/e₂)/log(h₁/h₂) ('pandas.core.frame.DataFrame')
    """
    frame = pd.DataFrame(rows, columns=CONVERGENCE_COLUMNS[:-1])
    ratios = np.log(frame["error"].shift(1) / frame["error"]) / np.log(frame["h"].shift(1) / frame["h"])
    frame["order"] = ratios
    return frame


def kernel_frame(kernel):
    """tabulate a heat kernel on its grid

    :param kernel: the kernel ('propagator.HeatKernel')
    :return: a data frame with one row per grid pair (x, y) ('pandas.core.frame.DataFrame')
    """
    x, y = np.meshgrid(kernel.grid, kernel.grid, indexing="ij")
    values = kernel.values
    return pd.DataFrame({"x": x.ravel(), "y": y.ravel(), "re_K": values.real.ravel(), "im_K": values.imag.ravel()},
                        columns=KERNEL_COLUMNS)


def kernel_row_frame(estimate):
    """tabulate a kernel row K(x, y) at fixed y, e.g. a Monte-Carlo estimate with its standard error

    :param estimate: the row estimate ('propagator.KernelEstimate')
    :return: a data frame with the columns x, y, re_K, im_K and stderr ('pandas.core.frame.DataFrame')
    """
    values = np.asarray(estimate.values)
    return pd.DataFrame({"x": estimate.x, "y": np.full(len(estimate.x), estimate.y), "re_K": values.real,
                         "im_K": values.imag, "stderr": estimate.stderr}, columns=KERNEL_ROW_COLUMNS)


def _planar(vector):
    vector = np.asarray(vector, dtype=float).ravel()
    return (vector[0], vector[1]) if len(vector) > 1 else (vector[0], 0.0)


def trajectory_frame(trajectory):
    """tabulate a classical trajectory: the start of every flight segment, every bounce and the final state

    :param trajectory: the trajectory ('classical_sim.Trajectory')
    :return: a data frame with the columns t, x, y, vx, vy and event ('pandas.core.frame.DataFrame')
    """
    events = []
    for segment in trajectory.segments:
        events.append((segment.t_start, 1, (*_planar(segment.start), *_planar(segment.velocity), "flight")))
    for bounce in trajectory.bounces:
        events.append((bounce.time, 0, (*_planar(bounce.point), *_planar(bounce.velocity_out), "bounce")))
    if trajectory.status == "absorbed":
        events.append((trajectory.t_final, 2, (*_planar(trajectory.final_position), 0.0, 0.0, "absorbed")))
    else:
        events.append((trajectory.t_final, 2, (*_planar(trajectory.final_position),
                                               *_planar(trajectory.final_velocity), "end")))
    # a bounce precedes the flight that leaves it
    rows = [(time, *values) for time, _, values in sorted(events, key=lambda event: (event[0], event[1]))]
    return pd.DataFrame(rows, columns=TRAJECTORY_COLUMNS)


def audit_frame(rows: list):
    """tabulate the momentum audit of a trajectory

    :param rows: one tuple per bounce in the order of AUDIT_COLUMNS ('list')
    :return: a data frame with one row per bounce ('pandas.core.frame.DataFrame')
    """
    return pd.DataFrame(rows, columns=AUDIT_COLUMNS)


def report_frame(record: dict):
    """summarize a flat record as a two-column table for printing

    :param record: the record ('dict')
    :return: a data frame with the columns Quantity and Value ('pandas.core.frame.DataFrame')
    """
    return pd.DataFrame(list(record.items()), columns=["Quantity", "Value"])
