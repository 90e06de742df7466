import json
import os
import tempfile
import unittest

try:
    from quantum_feedback.config import ConfigError, load_config, parse_config
except ImportError:
    import sys
    sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
    from quantum_feedback.config import ConfigError, load_config, parse_config
from quantum_feedback.feedback_protocol import error_probability, validate_code
from quantum_feedback.serialization import encode_code

CONFIG_DIR = os.path.abspath(os.path.join(os.path.dirname(__file__), '..', 'configs'))


def _minimal(**protocol_overrides):
    protocol = {
        "n": 1,
        "codebook": ["0", "1"],
        "letter_states": {"0": {"bloch": [0.0, 0.0]}, "1": {"bloch": [3.141592653589793, 0.0]}},
    }
    protocol.update(protocol_overrides)
    return {"channel": {"name": "identity"}, "protocol": protocol}


class TestShippedConfigs(unittest.TestCase):

    def test_every_shipped_config_builds_a_valid_code(self):
        names = sorted(f for f in os.listdir(CONFIG_DIR) if f.endswith('.json'))
        self.assertTrue(names)
        for name in names:
            with self.subTest(config=name):
                config = load_config(os.path.join(CONFIG_DIR, name))
                code = config.build_code()
                self.assertEqual(validate_code(code), [])

    def test_feedback_config_fields(self):
        config = load_config(os.path.join(CONFIG_DIR, 'feedback_n3.json'))
        self.assertEqual(config.channel.name, 'amplitude_damping')
        self.assertAlmostEqual(config.channel.param, 0.2)
        self.assertEqual(config.protocol.n, 3)
        self.assertEqual(config.protocol.message_map, (0, 1, 2, 3, 3))
        self.assertIn(2, config.protocol.feedback)
        self.assertEqual(config.simulation.seed, 11)

    def test_depolarizing_config_sections(self):
        config = load_config(os.path.join(CONFIG_DIR, 'depolarizing.json'))
        self.assertEqual(config.optimizer.starts, 4)
        self.assertEqual(config.optimizer.seed, 3)
        self.assertEqual(config.optimize_n, (1,))
        self.assertEqual(config.typicality.l, 2)


class TestConfigErrors(unittest.TestCase):

    def test_unknown_field_names_its_path(self):
        data = _minimal(colour="blue")
        with self.assertRaises(ConfigError) as ctx:
            parse_config(data)
        self.assertEqual(ctx.exception.path, '$.protocol.colour')

    def test_unknown_channel(self):
        data = _minimal()
        data['channel'] = {"name": "teleporter"}
        with self.assertRaises(ConfigError) as ctx:
            parse_config(data)
        self.assertEqual(ctx.exception.path, '$.channel.name')

    def test_missing_parameter(self):
        data = _minimal()
        data['channel'] = {"name": "depolarizing"}
        with self.assertRaises(ConfigError) as ctx:
            parse_config(data)
        self.assertEqual(ctx.exception.path, '$.channel.param')

    def test_codeword_length_mismatch(self):
        with self.assertRaises(ConfigError) as ctx:
            parse_config(_minimal(codebook=["0", "11"]))
        self.assertEqual(ctx.exception.path, '$.protocol.codebook[1]')

    def test_letter_outside_alphabet(self):
        with self.assertRaises(ConfigError) as ctx:
            parse_config(_minimal(codebook=["0", "2"]))
        self.assertEqual(ctx.exception.path, '$.protocol.codebook[1]')

    def test_wrong_number_of_measurements(self):
        data = _minimal(n=2, codebook=["00", "11"], measurements=[])
        with self.assertRaises(ConfigError) as ctx:
            parse_config(data)
        self.assertEqual(ctx.exception.path, '$.protocol.measurements')

    def test_strength_out_of_range(self):
        data = _minimal(n=2, codebook=["00", "11"],
                        measurements=[{"kind": "projective", "strength": 1.5}])
        with self.assertRaises(ConfigError) as ctx:
            parse_config(data)
        self.assertEqual(ctx.exception.path, '$.protocol.measurements[0].strength')

    def test_invalid_json_is_a_config_error(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'broken.json')
            with open(path, 'w') as f:
                f.write('{"channel": ')
            with self.assertRaises(ConfigError) as ctx:
                load_config(path)
            self.assertEqual(ctx.exception.path, '$')
            self.assertIn('invalid JSON', str(ctx.exception))

    def test_missing_file_is_a_config_error(self):
        with self.assertRaises(ConfigError):
            load_config('/nonexistent/experiment.json')

    def test_config_error_is_a_value_error(self):
        self.assertTrue(issubclass(ConfigError, ValueError))


class TestCodeFile(unittest.TestCase):

    def test_serialized_code_reproduces_error_probability(self):
        config = load_config(os.path.join(CONFIG_DIR, 'feedback_n3.json'))
        code = config.build_code()
        expected = error_probability(code)
        with tempfile.TemporaryDirectory() as tmp:
            with open(os.path.join(tmp, 'code.json'), 'w') as f:
                json.dump(encode_code(code), f)
            data = {"channel": {"name": "amplitude_damping", "param": 0.2},
                    "protocol": {"code_file": "code.json"}}
            config_path = os.path.join(tmp, 'experiment.json')
            with open(config_path, 'w') as f:
                json.dump(data, f)
            loaded = load_config(config_path).build_code()
        self.assertEqual(loaded.codebook.words, code.codebook.words)
        result = error_probability(loaded)
        self.assertAlmostEqual(result.average, expected.average, places=12)
        self.assertAlmostEqual(result.maximum, expected.maximum, places=12)

    def test_code_file_excludes_other_protocol_fields(self):
        data = {"channel": {"name": "identity"}, "protocol": {"code_file": "code.json", "n": 1}}
        with self.assertRaises(ConfigError) as ctx:
            parse_config(data)
        self.assertEqual(ctx.exception.path, '$.protocol.n')


if __name__ == '__main__':
    unittest.main()
