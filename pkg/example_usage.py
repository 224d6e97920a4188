#!/usr/bin/env python3
"""
Example script demonstrating how to use the Euler-Boltzmann laboratory.
This script shows how to drive the package directly instead of through the CLI.
"""

import json
import os
import tempfile
from dataclasses import replace

from euler_boltzmann import runner
from euler_boltzmann.config import RunConfig
from euler_boltzmann.scenarios import (ProfileSpec, build_certificate, builtin_scenarios, get_scenario,
                                       validate_scenario, write_scenario)


def list_scenarios():
    """List the built-in scenarios with their claims"""
    return [{'name': s.name, 'dimension': s.dimension, 'claims': list(s.claims)} for s in builtin_scenarios()]


def certify(name):
    """Compute the blow-up certificate of a built-in scenario without running it"""
    return build_certificate(get_scenario(name)).to_dict()


def steeper_burgers_file(directory, slope=-2.0):
    """Write an edited copy of the Burgers scenario; t_burgers becomes 1/|slope|"""
    scenario = get_scenario('theorem36-burgers-1d')
    scenario = replace(scenario, name='burgers-steep', u0=ProfileSpec('linear', {'slope': slope}),
                       expected={'t_burgers': -1.0 / slope})
    report = validate_scenario(scenario)
    if not report.passed:
        raise SystemExit(json.dumps(report.to_dict(), indent=2))
    return write_scenario(scenario, os.path.join(directory, 'burgers-steep.ini'))


def simulate(scenario, output_dir, **overrides):
    """Run a scenario and return the artifact summary"""
    artifacts = runner.run(RunConfig(scenario=scenario, mode='simulate', output_dir=output_dir,
                                     plots=True, **overrides))
    return artifacts.to_dict()


# Example usage
if __name__ == "__main__":
    print("Built-in scenarios:")
    print(json.dumps(list_scenarios(), indent=2))

    print("\n1. Certificate of the damped scenario:")
    print(json.dumps(certify('corollary38-damped'), indent=2, default=str))

    with tempfile.TemporaryDirectory() as directory:
        print("\n2. Edited scenario file:")
        path = steeper_burgers_file(directory)
        print(path)

        print("\n3. Simulating it until the gradient monitor fires:")
        print(json.dumps(simulate(path, directory, cells=200), indent=2, default=str))
