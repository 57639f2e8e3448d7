import json
import os
import unittest

import yaml
from click.testing import CliRunner

from blackchain.cli.cli import (
    AUDIT_FAILED,
    AUDIT_OK,
    AUDIT_PARSE_ERROR,
    blackchain,
)

SCENARIO = {
    "seed": 4,
    "ticks": 60,
    "world_width": 600.0,
    "world_height": 600.0,
    "vehicles": 6,
    "rsus": 4,
    "regions": 1,
    "difficulty": 4,
    "attackers": 1,
    "attack_start": 5,
}


class TestCli(unittest.TestCase):
    def setUp(self):
        self.runner = CliRunner(env={"BLACKCHAIN_DB_URI": None})

    def write_scenario(self, **changes):
        scenario = dict(SCENARIO, **changes)
        with open("scenario.yaml", "w") as f:
            yaml.safe_dump(scenario, f)

    def run_scenario(self):
        self.write_scenario()
        result = self.runner.invoke(
            blackchain, ["run", "--config", "scenario.yaml", "--out", "out"]
        )
        self.assertEqual(result.exit_code, 0, result.output)
        return result

    def audit(self, chainfile="out/chain.bin"):
        return self.runner.invoke(
            blackchain, ["audit", chainfile, "--genesis", "out/genesis.yaml"]
        )

    def testRunWritesArtifacts(self):
        with self.runner.isolated_filesystem():
            result = self.run_scenario()
            self.assertIn("Attackers revoked", result.output)
            for name in ("chain.bin", "genesis.yaml", "events.jsonl", "audit.csv", "metrics.csv", "runs.db"):
                self.assertTrue(os.path.exists(os.path.join("out", name)), name)

    def testAuditExitCodes(self):
        with self.runner.isolated_filesystem():
            self.run_scenario()
            result = self.audit()
            self.assertEqual(result.exit_code, AUDIT_OK, result.output)
            self.assertIn("verifies", result.output)

            with open("out/chain.bin", "rb") as f:
                data = bytearray(f.read())

            with open("truncated.bin", "wb") as f:
                f.write(bytes(data[:-1]))
            self.assertEqual(self.audit("truncated.bin").exit_code, AUDIT_PARSE_ERROR)

            for position in (len(data) // 2, 0):
                flipped = bytearray(data)
                flipped[position] ^= 0xFF
                with open("flipped.bin", "wb") as f:
                    f.write(bytes(flipped))
                result = self.audit("flipped.bin")
                self.assertEqual(result.exit_code, AUDIT_FAILED, position)

    def testSameSeedSameChain(self):
        with self.runner.isolated_filesystem():
            self.run_scenario()
            with open("out/chain.bin", "rb") as f:
                first = f.read()
            self.run_scenario()
            with open("out/chain.bin", "rb") as f:
                self.assertEqual(f.read(), first)

    def testExport(self):
        with self.runner.isolated_filesystem():
            self.run_scenario()
            result = self.runner.invoke(blackchain, ["export", "out/chain.bin"])
            self.assertEqual(result.exit_code, 0, result.output)
            heights = [json.loads(line)["height"] for line in result.output.splitlines()]
            self.assertEqual(heights, list(range(len(heights))))
            self.assertGreaterEqual(len(heights), 1)

    def testRecent(self):
        with self.runner.isolated_filesystem():
            self.run_scenario()
            result = self.runner.invoke(blackchain, ["recent", "--out", "out"])
            self.assertEqual(result.exit_code, 0, result.output)
            self.assertIn("Run 1 (seed 4)", result.output)

    def testSweep(self):
        with self.runner.isolated_filesystem():
            self.write_scenario(out="grid")
            with open("grid.yaml", "w") as f:
                yaml.safe_dump({"seed": [1, 2]}, f)
            result = self.runner.invoke(
                blackchain,
                ["sweep", "--config", "scenario.yaml", "--grid", "grid.yaml", "--out", "grid/metrics.csv"],
            )
            self.assertEqual(result.exit_code, 0, result.output)
            self.assertIn("Wrote 2 rows", result.output)

    def testBadConfig(self):
        with self.runner.isolated_filesystem():
            self.write_scenario(vehicles=-1)
            result = self.runner.invoke(
                blackchain, ["run", "--config", "scenario.yaml"]
            )
            self.assertEqual(result.exit_code, 1)
            self.assertIn("vehicles", result.output)
