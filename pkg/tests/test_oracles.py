import stat
import sys
import textwrap

import numpy as np
import pytest

from attrens import BuiltinLinear, CallbackOracle, ExternalCommandOracle, read_npy, write_npy
from attrens.errors import OracleFailure


class TestBuiltinLinear:
    def test_inner_product(self):
        model = BuiltinLinear(np.array([[[[2.0, 1.0]]]]))
        logits = model.predict(np.ones((1, 1, 1, 2)))
        assert logits.shape == (1, 1)
        assert logits[0, 0] == pytest.approx(3.0)

    def test_zero_input_zero_logits(self, rng):
        model = BuiltinLinear(rng.standard_normal((3, 2, 2, 2)))
        np.testing.assert_array_equal(model.predict(np.zeros((2, 2, 2, 2))), np.zeros((2, 3)))

    def test_explain_elementwise_product(self):
        model = BuiltinLinear(np.array([[[[2.0, 1.0]]]]))
        attr = model.explain(np.array([[[[3.0, 4.0]]]]), 0)
        np.testing.assert_array_equal(attr, [[[[6.0, 4.0]]]])

    def test_explain_zero_input(self, rng):
        model = BuiltinLinear(rng.standard_normal((2, 1, 2, 2)))
        np.testing.assert_array_equal(model.explain(np.zeros((1, 1, 2, 2)), 1), np.zeros((1, 1, 2, 2)))

    def test_target_out_of_range(self, rng):
        model = BuiltinLinear(rng.standard_normal((2, 1, 2, 2)))
        with pytest.raises(OracleFailure):
            model.explain(np.zeros((1, 1, 2, 2)), 5)

    def test_completeness_for_zero_baseline(self, rng):
        model = BuiltinLinear(rng.standard_normal((3, 2, 3, 3)))
        x = rng.standard_normal((4, 2, 3, 3))
        for target in range(3):
            attr = model.explain(x, target)
            np.testing.assert_allclose(
                attr.sum(axis=(1, 2, 3)), model.predict(x)[:, target], atol=1e-10
            )

    def test_shape_check(self, rng):
        model = BuiltinLinear(rng.standard_normal((2, 1, 2, 2)))
        with pytest.raises(OracleFailure):
            model.predict(np.zeros((1, 1, 3, 3)))


class TestCallbackOracle:
    def test_predict_callback(self):
        oracle = CallbackOracle(
            predict_fn=lambda x: x.reshape(x.shape[0], -1)[:, :2], num_classes=2
        )
        out = oracle.predict(np.ones((3, 1, 2, 2)))
        assert out.shape == (3, 2)

    def test_explain_callback_shape_enforced(self):
        oracle = CallbackOracle(explain_fn=lambda x, t: x[:, :, :1, :])
        with pytest.raises(OracleFailure):
            oracle.explain(np.ones((1, 1, 2, 2)), 0)


def write_script(path, body):
    path.write_text(textwrap.dedent(body))
    path.chmod(path.stat().st_mode | stat.S_IEXEC)
    return path


@pytest.fixture
def doubling_explainer(tmp_path):
    """External explainer: attribution = input * (target + 2)."""
    script = write_script(
        tmp_path / "explainer.py",
        """
        import sys
        import numpy as np
        from attrens import read_npy, write_npy
        inp, out, target = sys.argv[1], sys.argv[2], int(sys.argv[3])
        x = read_npy(inp)
        write_npy(x * (target + 2.0), out)
        """,
    )
    return ExternalCommandOracle(
        f"{sys.executable} {script} {{input}} {{output}} {{target}}",
        role="explainer", timeout=60,
    )


class TestExternalCommand:
    def test_round_trip_request_file(self, tmp_path, rng):
        arr = rng.standard_normal((2, 1, 3, 3))
        write_npy(arr, tmp_path / "req.npy")
        np.testing.assert_array_equal(read_npy(tmp_path / "req.npy"), arr)

    def test_explainer_invocation(self, doubling_explainer, rng):
        x = rng.standard_normal((2, 1, 2, 2))
        np.testing.assert_allclose(doubling_explainer.explain(x, 1), x * 3.0, atol=1e-12)

    def test_nonzero_exit_reports_diagnostics(self, tmp_path):
        script = write_script(
            tmp_path / "bad.py",
            """
            import sys
            sys.stderr.write("boom\\n")
            sys.exit(7)
            """,
        )
        oracle = ExternalCommandOracle(
            f"{sys.executable} {script} {{input}} {{output}}",
            role="model", num_classes=2,
        )
        with pytest.raises(OracleFailure, match="boom"):
            oracle.predict(np.ones((1, 1, 2, 2)))

    def test_wrong_shape_rejected(self, tmp_path):
        script = write_script(
            tmp_path / "wrong.py",
            """
            import sys
            import numpy as np
            from attrens import write_npy
            write_npy(np.zeros((5, 5)), sys.argv[2])
            """,
        )
        oracle = ExternalCommandOracle(
            f"{sys.executable} {script} {{input}} {{output}}",
            role="model", num_classes=3,
        )
        with pytest.raises(OracleFailure, match="shape"):
            oracle.predict(np.ones((2, 1, 2, 2)))

    def test_missing_response_file(self, tmp_path):
        oracle = ExternalCommandOracle(
            "true {input} {output}", role="model", num_classes=2
        )
        with pytest.raises(OracleFailure, match="no response"):
            oracle.predict(np.ones((1, 1, 2, 2)))

    def test_explainer_template_needs_target(self):
        with pytest.raises(ValueError):
            ExternalCommandOracle("cmd {input} {output}", role="explainer")

    def test_model_needs_num_classes(self):
        with pytest.raises(ValueError):
            ExternalCommandOracle("cmd {input} {output}", role="model")
