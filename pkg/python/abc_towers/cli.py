# !/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Filename: cli.py
# Project: abc_towers
# Author: The abc-towers developers
# Created: Tuesday, 23rd November 2021 9:12:40 am
# License: BSD 3-clause "New" or "Revised" License
# Copyright (c) 2021 The abc-towers developers
# Last Modified: Friday, 3rd December 2021 5:31:02 pm
# Modified By: The abc-towers developers


from __future__ import print_function, division, absolute_import

import argparse
import json
import logging
import pathlib
import sys
import warnings
from typing import Dict, List, Optional, Sequence

from abc_towers import __version__, log
from abc_towers.analysis.approximation import (aggregate_translation_check,
                                               neighborhood_predicate, rigidity_check,
                                               speed_constant, speed_exact, speed_ratio)
from abc_towers.analysis.fbar import (MatchConstants, ProductPartition, alignment_bound,
                                      fbar_distance, ks_criterion_check, level_partition,
                                      verify_match_lemma)
from abc_towers.analysis.towers import (build_bases, build_columns, generating_diagnostics,
                                        substantiality, verify_disjointness)
from abc_towers.config import RunConfig, config
from abc_towers.construction.bumps import BumpProfile, bump_audit
from abc_towers.construction.combinatorics import (CellAssignment, lattice_groups,
                                                   verify_combidisj, verify_coset_partition)
from abc_towers.construction.conjugations import (check_equivariance, diameter_check,
                                                  norm_bound_DH, stage_norm_bound,
                                                  verify_good_domains, verify_xi_factorization)
from abc_towers.construction.scheduler import build_ladder, check_rotation_distance
from abc_towers.exceptions import (ConditionViolation, MonteCarloInconclusive,
                                   NoAdmissibleStage, TowerAnalyticOnlyWarning, TowerError,
                                   TowerIOError, TowerMissingDependency)
from abc_towers.helpers.figures import (combinatorics_figure, good_domain_figure,
                                        save_figure, skeleton_figure, towers_figure)
from abc_towers.helpers.io import dump_json, ensure_directory, format_table, write_csv


__all__ = ['EXIT_OK', 'EXIT_VIOLATION', 'EXIT_IO', 'EXIT_INCONCLUSIVE', 'SUBCOMMANDS',
           'PIPELINE', 'Pipeline', 'run_pipeline', 'emit_figures', 'main']

EXIT_OK = 0
EXIT_VIOLATION = 2
EXIT_IO = 3
EXIT_INCONCLUSIVE = 4

PIPELINE = ('plan', 'combinatorics', 'maps', 'towers', 'speed', 'fbar')
SUBCOMMANDS = PIPELINE[:5] + ('rigidity', 'fbar', 'all')

CERT_COLUMNS = ['stage', 'condition', 'lhs', 'relation', 'rhs', 'holds', 'enforced', 'note']
SPEED_COLUMNS = ['stage', 'm', 'wraparound_1', 'wraparound_2', 'exact_wraparound_term',
                 'bound_error1', 'ratio', 'constant', 'eps_ratio', 'eps_ratio_bound', 'passed']
FBAR_COLUMNS = ['stage', 'alpha', 'trial', 'k', 'bound', 'alignment', 'dp']

# config knobs copied onto the runtime Config
RUNTIME_KNOBS = ('exhaustive_limit', 'enumeration_limit', 'lattice_limit', 'mc_samples',
                 'mc_confidence', 'mc_chunks', 'fbar_trials', 'svg_precision', 'threads')


def _good_domain_cells(stage) -> int:
    return 2 * stage.lam * stage.lam * stage.gamma


class Pipeline(object):
    """ The staged verification run behind the command line

    The ladder and the tower pairs are computed once, on first use, so
    every step can run on its own; each step returns its report and
    records a verdict of 'pass', 'fail' or 'inconclusive'.

    Parameters
    ----------
    run : RunConfig
        The validated run configuration
    output_dir : str or Path, optional
        Where reports and figures go, by default ``run.output_dir``
    threads : int, optional
        Worker processes, overriding the configuration
    figures : bool
        Whether the steps also write SVG figures
    """

    def __init__(self, run: RunConfig, output_dir=None, threads: int = None,
                 figures: bool = True):
        self.run = run
        self.output_dir = pathlib.Path(output_dir or run.output_dir)
        self.threads = threads
        self.figures = figures
        self.verdicts: Dict[str, str] = {}
        self.files: Dict[str, List[str]] = {}
        self._ladder = None
        self._pairs = {}
        self._speed = {}

    def __repr__(self):
        return f'<Pipeline(seed={self.run.seed}, n_max={self.run.n_max})>'

    @property
    def ladder(self):
        if self._ladder is None:
            r = self.run
            self._ladder = build_ladder(r.seed, r.n_max, eps_global=r.eps_global, d=r.d,
                                        target=r.target,
                                        enforce_convergence=r.enforce_convergence,
                                        l_seq=r.l_seq, k_ceiling=r.k_ceiling)
        return self._ladder

    @property
    def stages(self):
        return self.ladder.stages

    def pair(self, stage):
        if stage.n not in self._pairs:
            self._pairs[stage.n] = build_bases(stage, check=True)
        return self._pairs[stage.n]

    def speed_report(self, stage):
        if stage.n not in self._speed:
            self._speed[stage.n] = speed_exact(self.pair(stage))
        return self._speed[stage.n]

    def _record(self, step: str, passed: bool, inconclusive: bool = False) -> str:
        verdict = 'pass' if passed and not inconclusive else \
            ('inconclusive' if passed else 'fail')
        self.verdicts[step] = verdict
        log.info(f'step {step}: {verdict}')
        return verdict

    def _write(self, step: str, report: dict) -> None:
        path = dump_json(report, self.output_dir / f'{step}.json')
        self.files.setdefault(step, []).append(path.name)

    def _add_files(self, step: str, paths: Sequence[pathlib.Path]) -> None:
        self.files.setdefault(step, []).extend(p.name for p in paths)

    # steps

    def plan(self) -> dict:
        """ Build the parameter ladder and re-check its certificate """
        ladder = self.ladder
        distance = check_rotation_distance(ladder)
        failures = ladder.audit()
        report = {'ladder': ladder, 'rotation_distance': distance,
                  'audit_failures': [c.as_dict() for c in failures],
                  'passed': not failures and distance['passed']}
        self._record('plan', report['passed'])
        self._write('plan', report)
        try:
            text = format_table([c.as_dict() for c in ladder.cert], CERT_COLUMNS)
        except TowerMissingDependency as err:
            log.warning(f'plan table skipped: {err}')
        else:
            path = self.output_dir / 'plan.txt'
            try:
                path.write_text(text + '\n')
            except OSError as err:
                raise TowerIOError(f'Failed to write {path}: {err}') from err
            self._add_files('plan', [path])
        return report

    def combinatorics(self) -> dict:
        """ Cell bijectivity, coset partition and k(i, j) tables per stage """
        rows = []
        for stage in self.stages:
            row = {'stage': stage.as_dict(),
                   'combidisj': verify_combidisj(stage, config.exhaustive_limit)}
            if stage.lam <= config.lattice_limit:
                row['tables'] = CellAssignment(stage).as_dict()
                row['coset_partition'] = verify_coset_partition(lattice_groups(stage), stage.q,
                                                                stage.q_prime)
            else:
                row['tables'] = None
                row['coset_partition'] = None
            rows.append(row)
        passed = all(r['combidisj']['passed'] and
                     all((r['coset_partition'] or {1: True}).values()) for r in rows)
        report = {'stages': rows, 'passed': passed}
        self._record('combinatorics', passed)
        self._write('combinatorics', report)
        if self.figures:
            small = [s for s in self.stages if s.lam <= config.lattice_limit]
            self._add_files('combinatorics', emit_figures({'combinatorics': small},
                                                          self.output_dir))
        return report

    def maps(self) -> dict:
        """ Good domains, equivariance, bump audit and norm certificates per stage """
        rows = []
        audits = {}
        for stage in self.stages:
            row = {'stage': stage.n, 'diameter': diameter_check(stage),
                   'norm': stage_norm_bound(stage),
                   'xi_factorization': verify_xi_factorization(stage, seed=self.run.rng_seed)}
            if _good_domain_cells(stage) <= config.exhaustive_limit:
                row['mode'] = 'exhaustive'
                row['good_domains'] = verify_good_domains(stage, config.exhaustive_limit)
                row['equivariance'] = check_equivariance(stage, config.exhaustive_limit)
            else:
                warnings.warn(f'stage {stage.n}: good domains of {_good_domain_cells(stage)} '
                              'cells are not enumerated', TowerAnalyticOnlyWarning)
                row['mode'] = 'analytic'
                row['good_domains'] = row['equivariance'] = None
            key = (stage.eps, stage.gamma)
            if key not in audits:
                audits[key] = bump_audit(BumpProfile.for_stage(stage.eps, stage.gamma))
            row['bump_audit'] = audits[key]
            rows.append(row)

        def ok(row):
            checks = [row['diameter']['passed'], row['bump_audit']['passed'],
                      row['xi_factorization']['passed']]
            if row['mode'] == 'exhaustive':
                checks += [row['good_domains']['passed'], row['equivariance']['passed']]
            return all(checks)

        report = {'stages': rows, 'norm_bound_DH': norm_bound_DH(self.stages, d=self.run.d),
                  'passed': all(ok(r) for r in rows)}
        self._record('maps', report['passed'])
        self._write('maps', report)
        if self.figures:
            small = [s for s in self.stages
                     if _good_domain_cells(s) <= config.exhaustive_limit]
            self._add_files('maps', emit_figures({'maps': small}, self.output_dir))
        return report

    def towers(self) -> dict:
        """ Tower bases, disjointness, substantiality, generating fractions and columns """
        rows = []
        for stage in self.stages:
            pair = self.pair(stage)
            columns = build_columns(pair)
            rows.append({'stage': stage.n, 'bases': pair.report,
                         'disjointness': verify_disjointness(pair, threads=self.threads),
                         'substantiality': substantiality(pair, self.run.substantiality_r),
                         'generating': generating_diagnostics(pair),
                         'columns': columns.report})
        passed = all(r['bases']['passed'] and r['disjointness']['passed'] and
                     r['substantiality']['passed'] and r['columns']['passed'] for r in rows)
        report = {'stages': rows, 'passed': passed}
        self._record('towers', passed)
        self._write('towers', report)
        if self.figures:
            small = [self.pair(s) for s in self.stages
                     if self.pair(s).h2 <= config.enumeration_limit]
            self._add_files('towers', emit_figures({'towers': small}, self.output_dir))
        return report

    def _next_l(self, index: int) -> int:
        l_seq = self.ladder.l_seq
        return l_seq[index + 1] if index + 1 < len(l_seq) else l_seq[-1] + 1

    def speed(self) -> dict:
        """ Exact approximation speed, rigidity and the sampled continuity check """
        rows, table = [], []
        inconclusive = False
        for index, stage in enumerate(self.stages):
            pair = self.pair(stage)
            speed = self.speed_report(stage)
            speed_ratio(speed)
            boxes = (pair.h1 + pair.h2) * stage.lam
            if index + 1 < len(self.stages) and boxes <= config.exhaustive_limit:
                speed.mc_error3 = aggregate_translation_check(
                    pair, self.stages[index + 1], samples=self.run.mc_samples,
                    seed=self.run.rng_seed + stage.n, threads=self.threads)
            elif index + 1 < len(self.stages):
                log.warning(f'stage {stage.n}: translation check skipped for {boxes} boxes')
            mc = speed.mc_error3.verdict if speed.mc_error3 else 'unchecked'
            inconclusive = inconclusive or mc == 'inconclusive'
            metrics = {'derivative_distance': 0, 'rigidity_distance': 0,
                       'speed': speed.exact_wraparound_term}
            rows.append({'stage': stage.n, 'speed': speed,
                         'rigidity': rigidity_check(stage),
                         'neighborhood': neighborhood_predicate(
                             metrics, stage, self._next_l(index), speed_constant(speed)),
                         'mc_verdict': mc})
            table.append({'stage': stage.n, 'm': stage.m,
                          'wraparound_1': speed.wraparound[1],
                          'wraparound_2': speed.wraparound[2],
                          'exact_wraparound_term': speed.exact_wraparound_term,
                          'bound_error1': speed.bound_error1, 'ratio': speed.ratio,
                          'constant': speed_constant(speed), 'eps_ratio': speed.eps_ratio,
                          'eps_ratio_bound': speed.eps_ratio_bound, 'passed': speed.passed})
        passed = all(r['speed'].passed and r['rigidity']['passed'] and r['neighborhood'] and
                     r['mc_verdict'] != 'fail' for r in rows)
        report = {'stages': rows, 'passed': passed}
        self._record('speed', passed, inconclusive)
        self._write('speed', report)
        path = write_csv(table, self.output_dir / 'speed.csv', SPEED_COLUMNS)
        self._add_files('speed', [path])
        return report

    def rigidity(self) -> dict:
        """ Exact periodicity of every stage map """
        rows = [rigidity_check(stage) for stage in self.stages]
        report = {'stages': rows, 'passed': all(r['passed'] for r in rows)}
        self._record('rigidity', report['passed'])
        self._write('rigidity', report)
        return report

    def fbar(self) -> dict:
        """ Matching lemma and criterion check for the stages small enough to sample """
        if self.run.fbar_names is not None:
            return self._fbar_names()
        rows = []
        constants = MatchConstants(r=self.run.substantiality_r)
        tests = [ProductPartition('levels'), ProductPartition('blocks', blocks=4),
                 ProductPartition('junk', junk_columns=True)]
        for stage in self.stages:
            if stage.m > config.enumeration_limit:
                warnings.warn(f'stage {stage.n}: names of length ~m^2 for m = {stage.m} are '
                              'not sampled', TowerAnalyticOnlyWarning)
                rows.append({'stage': stage.n, 'mode': 'analytic',
                             'constants': constants.as_dict(),
                             'alignment_bounds': {str(a): alignment_bound(
                                 stage.m, a, constants.r) for a in self.run.fbar_alphas},
                             'match_lemma': [], 'criterion': None})
                continue
            pair = self.pair(stage)
            partition = level_partition(pair, speed=self.speed_report(stage))
            lemma = [verify_match_lemma(pair, a, trials=self.run.fbar_trials,
                                        seed=self.run.rng_seed, constants=constants,
                                        partition=partition, threads=self.threads)
                     for a in self.run.fbar_alphas]
            criterion = ks_criterion_check(pair, self.run.fbar_eps_schedule, tests,
                                       trials=self.run.fbar_trials, seed=self.run.rng_seed,
                                       constants=constants, partition=partition,
                                       threads=self.threads)
            rows.append({'stage': stage.n, 'mode': 'sampled', 'constants': constants.as_dict(),
                         'match_lemma': lemma, 'criterion': criterion})
        # the criterion check is a finite-scale diagnostic and does not enter the verdict
        passed = all(m['passed'] for r in rows for m in r['match_lemma'])
        report = {'stages': rows, 'passed': passed}
        self._record('fbar', passed)
        self._write('fbar', report)
        table = [dict(o, stage=r['stage'], alpha=m['alpha'])
                 for r in rows for m in r['match_lemma'] for o in m['offsets']]
        path = write_csv(table, self.output_dir / 'fbar.csv', FBAR_COLUMNS)
        self._add_files('fbar', [path])
        return report

    def _fbar_names(self) -> dict:
        """ Distance and optimal witness of the two configured names """
        a, b = self.run.fbar_names
        distance, witness = fbar_distance(a, b)
        report = {'mode': 'names', 'length': len(a), 'distance': distance,
                  'witness': {'k_indices': list(witness.k_indices),
                              'l_indices': list(witness.l_indices)},
                  'stages': [], 'passed': witness.valid_for(a, b)}
        log.info(f'f-bar of the given names: {distance}')
        self._record('fbar', report['passed'])
        self._write('fbar', report)
        return report

    def summary(self, command: str, code: int, error: Optional[str] = None) -> dict:
        settings = self.run.dict(exclude={'threads', 'output_dir'})
        return {'command': command, 'exit_code': code, 'error': error, 'config': settings,
                'steps': {step: {'verdict': v, 'files': sorted(self.files.get(step, []))}
                          for step, v in self.verdicts.items()}}


def emit_figures(artifacts: dict, directory) -> List[pathlib.Path]:
    """ Write the SVG figures of the stage artifacts

    Parameters
    ----------
    artifacts : dict
        Any of 'combinatorics' and 'maps' mapping to lists of StageParams
        and 'towers' mapping to a list of TowerPairs.  An empty list gives
        one empty skeleton figure.
    directory : str or Path
        The output directory

    Returns
    -------
    list of Path
        the files written, none when drawsvg is not installed
    """
    directory = pathlib.Path(directory)
    makers = {'combinatorics': combinatorics_figure, 'maps': good_domain_figure,
              'towers': towers_figure}
    paths = []
    try:
        for kind in sorted(artifacts):
            if kind not in makers:
                raise TowerError(f'no figure for {kind!r}')
            items = artifacts[kind]
            if not items:
                paths.append(save_figure(skeleton_figure(f'{kind}: no stage'),
                                         directory / f'{kind}_empty.svg'))
                continue
            for item in items:
                n = item.stage.n if kind == 'towers' else item.n
                paths.append(save_figure(makers[kind](item), directory / f'{kind}_{n}.svg'))
    except TowerMissingDependency as err:
        log.warning(f'figures skipped: {err}')
    return paths


def _configure_runtime(run: RunConfig, threads: Optional[int]) -> None:
    for name in RUNTIME_KNOBS:
        setattr(config, name, getattr(run, name))
    # -1 is resolved per call by worker_count
    if threads is not None and threads != -1:
        config.threads = threads


def run_pipeline(run: RunConfig, command: str = 'all', output_dir=None, threads: int = None,
                 figures: bool = True) -> int:
    """ Run one subcommand or the whole pipeline and write summary.json

    Parameters
    ----------
    run : RunConfig
        The validated run configuration
    command : str
        One of SUBCOMMANDS
    output_dir : str or Path, optional
        Overrides ``run.output_dir``; the directory must exist
    threads : int, optional
        Worker processes
    figures : bool
        Whether SVG figures are written

    Returns
    -------
    int
        0 when every check passes, 2 on a violated condition, 3 on an I/O
        failure and 4 when a Monte Carlo check is inconclusive
    """
    if command not in SUBCOMMANDS:
        raise TowerError(f'unknown subcommand {command!r}')
    _configure_runtime(run, threads)
    pipeline = Pipeline(run, output_dir=output_dir, threads=threads, figures=figures)
    try:
        ensure_directory(pipeline.output_dir)
    except TowerIOError as err:
        log.error(str(err))
        return EXIT_IO

    steps = PIPELINE if command == 'all' else (command,)
    error = None
    try:
        for step in steps:
            getattr(pipeline, step)()
    except (ConditionViolation, NoAdmissibleStage) as err:
        log.error(f'{type(err).__name__}: {err}')
        code, error = EXIT_VIOLATION, str(err)
    except (TowerIOError, OSError) as err:
        log.error(f'I/O failure: {err}')
        return EXIT_IO
    except MonteCarloInconclusive as err:
        log.error(f'Monte Carlo check inconclusive: {err}')
        code, error = EXIT_INCONCLUSIVE, str(err)
    else:
        verdicts = set(pipeline.verdicts.values())
        code = EXIT_VIOLATION if 'fail' in verdicts else \
            (EXIT_INCONCLUSIVE if 'inconclusive' in verdicts else EXIT_OK)

    try:
        dump_json(pipeline.summary(command, code, error), pipeline.output_dir / 'summary.json')
    except TowerIOError:
        return EXIT_IO
    log.info(f'{command}: exit code {code}')
    return code


def _read_names(path: pathlib.Path) -> list:
    """ Two names from a JSON list or from the first two non-empty lines of a text file """
    text = path.read_text()
    try:
        names = json.loads(text)
    except ValueError:
        names = [line.strip() for line in text.splitlines() if line.strip()][:2]
    return names


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='abc_towers',
        description='Construct and verify approximation-by-conjugation towers with exact '
                    'arithmetic.')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    parser.add_argument('config', type=pathlib.Path,
                        help='JSON (or YAML) run configuration')
    parser.add_argument('command', nargs='?', default='all', choices=SUBCOMMANDS,
                        help='pipeline step to run (default: all)')
    parser.add_argument('-o', '--output-dir', type=pathlib.Path, default=None,
                        help='existing output directory, overriding the config')
    parser.add_argument('--threads', type=int, default=None,
                        help='worker processes, -1 for all cpus (default: '
                             'ABC_TOWERS_THREADS or the config)')
    parser.add_argument('--stages', type=int, default=None,
                        help='number of stages, overriding n_max')
    parser.add_argument('--no-figures', action='store_true', help='do not write SVG figures')
    names = parser.add_mutually_exclusive_group()
    names.add_argument('--names', nargs=2, metavar='NAME', default=None,
                       help='fbar: compare two inline names, one symbol per character')
    names.add_argument('--names-file', type=pathlib.Path, default=None,
                       help='fbar: JSON list of two names, or a text file with one name per line')
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument('-v', '--verbose', action='store_true', help='debug output')
    verbosity.add_argument('-q', '--quiet', action='store_true', help='warnings only')
    parser.add_argument('--log-file', type=pathlib.Path, default=None,
                        help='also log to this file')
    return parser


def main(argv: Sequence[str] = None) -> int:
    """ Command line entry point; returns the exit code """
    parser = _parser()
    args = parser.parse_args(argv)
    if args.stages is not None and args.stages < 1:
        parser.error(f"--stages must be at least 1, not {args.stages}")
    if args.threads is not None and args.threads < 1 and args.threads != -1:
        parser.error(f"--threads must be positive or -1, not {args.threads}")
    if args.verbose:
        log.sh.setLevel(logging.DEBUG)
    elif args.quiet:
        log.sh.setLevel(logging.WARNING)
    if args.log_file:
        log.start_file_logger(str(args.log_file))

    try:
        run = RunConfig.from_file(args.config)
    except (OSError, TowerIOError) as err:
        log.error(f'Cannot read run config {args.config}: {err}')
        return EXIT_IO
    except TowerError as err:
        log.error(str(err))
        return EXIT_VIOLATION
    if args.stages is not None:
        run = run.copy(update={'n_max': args.stages})
    if args.names or args.names_file:
        try:
            names = args.names or _read_names(args.names_file)
            run = RunConfig.from_dict({'fbar_names': names}, base=run.dict())
        except OSError as err:
            log.error(f'Cannot read names {args.names_file}: {err}')
            return EXIT_IO
        except TowerError as err:
            log.error(str(err))
            return EXIT_VIOLATION

    return run_pipeline(run, args.command, output_dir=args.output_dir, threads=args.threads,
                        figures=not args.no_figures)


if __name__ == '__main__':
    sys.exit(main())
