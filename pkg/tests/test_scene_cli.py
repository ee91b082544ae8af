import numpy as np
import pytest

import rayspace as rs
from rayspace.cli import main
from rayspace.errors import BadMediaChainError, SceneSyntaxError, UnknownSurfaceError
from rayspace.scene import load_scene, parse_scene

MINIMAL = """\
[surface m]
kind = plane
normal = 0 0 1

[system]
interface = m reflect

[family]
kind = point_source
apex = 0 0 5
axis = 0 0 -1
"""

POINT_SOURCE_ONLY = """\
[family]
kind = point_source
apex = 0 0 0
axis = 0 0 1
domain = -0.2 0.2 -0.2 0.2
"""


def read_report(path):
    out = {}
    for raw in path.read_text().splitlines():
        key, _, value = raw.partition(": ")
        out[key] = value
    return out


class TestParseScene:
    def test_minimal_scene(self):
        scene = parse_scene(MINIMAL)
        assert len(scene.system.interfaces) == 1
        assert scene.system.interfaces[0].action == rs.REFLECT
        assert scene.system.ambient_index == 1.0
        assert scene.family_kind == "point_source"
        assert isinstance(scene.system.interfaces[0].surface, rs.Plane)

    def test_refract_indices(self):
        scene = parse_scene(
            "[surface s]\nkind = sphere\ncenter = 0 0 0\nradius = 2\n"
            "[system]\ninterface = s refract 1 1.5\n"
        )
        itf = scene.system.interfaces[0]
        assert itf.action == rs.REFRACT
        assert itf.n_in == 1.0 and itf.n_out == 1.5

    def test_unknown_surface_reference(self):
        text = "[system]\ninterface = m2 reflect\n"
        with pytest.raises(UnknownSurfaceError) as err:
            parse_scene(text)
        assert err.value.name == "m2"

    def test_equal_refraction_indices_rejected(self):
        text = (
            "[surface m]\nkind = plane\nnormal = 0 0 1\n"
            "[system]\ninterface = m refract 1.5 1.5\n"
        )
        with pytest.raises(BadMediaChainError):
            parse_scene(text)

    def test_unknown_key_fatal(self):
        text = "[surface m]\nkind = plane\nnormal = 0 0 1\nfrobnicate = 3\n"
        with pytest.raises(SceneSyntaxError) as err:
            parse_scene(text)
        assert err.value.line == 4

    def test_bad_header(self):
        with pytest.raises(SceneSyntaxError):
            parse_scene("[banana split]\n")

    def test_duplicate_key(self):
        text = "[surface m]\nkind = plane\nnormal = 0 0 1\nnormal = 0 1 0\n"
        with pytest.raises(SceneSyntaxError) as err:
            parse_scene(text)
        assert err.value.line == 4

    def test_bad_number(self):
        text = "[surface s]\nkind = sphere\ncenter = 0 0 0\nradius = huge\n"
        with pytest.raises(SceneSyntaxError):
            parse_scene(text)

    def test_missing_required_key(self):
        with pytest.raises(SceneSyntaxError):
            parse_scene("[surface s]\nkind = sphere\ncenter = 0 0 0\n")

    def test_domain_must_increase(self):
        text = (
            "[family]\nkind = point_source\napex = 0 0 0\naxis = 0 0 1\n"
            "domain = 0.2 -0.2 -0.2 0.2\n"
        )
        with pytest.raises(SceneSyntaxError):
            parse_scene(text)

    def test_option_validation(self):
        with pytest.raises(SceneSyntaxError):
            parse_scene("[options]\ngrid = 2\n")
        with pytest.raises(SceneSyntaxError):
            parse_scene("[options]\nepsilon = 2\n")

    def test_comments_and_inline_comments(self):
        text = (
            "# leading comment\n"
            "[surface m]\n"
            "kind = plane\n"
            "normal = 0 0 1  # unit, but any scale parses\n"
            "\n"
            "[options]\n"
            "grid = 11\n"
        )
        scene = parse_scene(text)
        assert scene.options["grid"] == 11
        assert np.allclose(scene.surfaces["m"].normal, [0, 0, 1])

    def test_duplicate_surface_section(self):
        text = (
            "[surface m]\nkind = plane\nnormal = 0 0 1\n"
            "[surface m]\nkind = plane\nnormal = 0 1 0\n"
        )
        with pytest.raises(SceneSyntaxError):
            parse_scene(text)

    def test_normal_congruence_family(self):
        text = (
            "[surface ball]\nkind = sphere\ncenter = 0 0 0\nradius = 2\n"
            "[family]\nkind = normal_congruence\nsurface = ball\n"
            "domain = -0.3 0.3 -0.3 0.3\n"
        )
        scene = parse_scene(text)
        assert scene.family.kind == "normal_congruence"
        assert abs(rs.defect(scene.family, (0.0, 0.0))) < 1e-8

    def test_load_scene_from_file(self, tmp_path):
        path = tmp_path / "scene.scene"
        path.write_text(MINIMAL)
        scene = load_scene(str(path))
        assert len(scene.system.interfaces) == 1


class TestCliCommands:
    def run(self, tmp_path, scene_text, command, extra=()):
        scene_path = tmp_path / "scene.scene"
        scene_path.write_text(scene_text)
        out_dir = tmp_path / "out"
        code = main([command, "--scene", str(scene_path), "--out", str(out_dir), *extra])
        return code, out_dir

    def test_defect_point_source_empty_system(self, tmp_path):
        code, out = self.run(tmp_path, POINT_SOURCE_ONLY, "defect")
        assert code == 0
        report = read_report(out / "report.txt")
        assert float(report["max_defect_before"]) < 1e-8
        assert report["verdict"] == "RECTANGULAR"
        assert "tolerance" in report and "step" in report
        assert (out / "defect_before.csv").read_text().startswith("k1,k2,value\n")

    def test_defect_two_skew_flags_not_rectangular(self, tmp_path):
        text = (
            "[family]\nkind = two_skew_lines\npoint1 = 1 0 0\ndir1 = 1 0 0\n"
            "point2 = 0 1 1\ndir2 = 0 1 0\ndomain = -0.25 0.25 -0.25 0.25\n"
        )
        code, out = self.run(tmp_path, text, "defect")
        assert code == 0
        report = read_report(out / "report.txt")
        assert report["verdict"] == "NOT RECTANGULAR"
        assert float(report["max_defect_after"]) > 0.1

    def test_check_symplectic_refraction_scale(self, tmp_path):
        text = (
            "[surface lens]\nkind = sphere\ncenter = 0 0 0\nradius = 2\n"
            "[system]\ninterface = lens refract 1 1.5\n"
            "[family]\nkind = point_source\napex = 0 0 5\naxis = 0 0 -1\n"
            "domain = -0.15 0.15 -0.15 0.15\n"
        )
        code, out = self.run(tmp_path, text, "check-symplectic")
        assert code == 0
        report = read_report(out / "report.txt")
        assert abs(float(report["interface_0_scale"]) - 1 / 1.5) < 1e-15
        assert float(report["interface_0_residual"]) < 1e-6
        assert report["symplectic"] == "true"

    def test_trace_writes_lines(self, tmp_path):
        code, out = self.run(tmp_path, MINIMAL + "domain = -0.2 0.2 -0.2 0.2\n", "trace", ("--grid", "3"))
        assert code == 0
        rows = (out / "trace.csv").read_text().splitlines()
        assert rows[0] == "k1,k2,ux,uy,uz,qx,qy,qz"
        assert len(rows) == 1 + 9
        report = read_report(out / "report.txt")
        assert float(report["max_line_residual"]) < 1e-12

    def test_wavefront_not_rectangular_exits_2(self, tmp_path):
        text = (
            "[family]\nkind = two_skew_lines\npoint1 = 1 0 0\ndir1 = 1 0 0\n"
            "point2 = 0 1 1\ndir2 = 0 1 0\ndomain = -0.25 0.25 -0.25 0.25\n"
        )
        code, _ = self.run(tmp_path, text, "wavefront")
        assert code == 2

    def test_scene_error_exits_1(self, tmp_path):
        code, _ = self.run(tmp_path, "[surface m]\nkind = plane\n", "defect")
        assert code == 1

    def test_missing_scene_file_exits_1(self, tmp_path):
        code = main(["defect", "--scene", str(tmp_path / "nope.scene"), "--out", str(tmp_path)])
        assert code == 1

    def test_mirror_requires_focus_option(self, tmp_path):
        code, _ = self.run(tmp_path, POINT_SOURCE_ONLY, "mirror")
        assert code == 1

    def test_characteristic_plane_mirror(self, tmp_path):
        text = (
            "[surface m]\nkind = plane\nnormal = 0 0 1\n"
            "[system]\ninterface = m reflect\n"
            "[options]\nm1 = 0 0 1\nm2 = 1 0 1\n"
        )
        code, out = self.run(tmp_path, text, "characteristic")
        assert code == 0
        report = read_report(out / "report.txt")
        assert abs(float(report["optical_length"]) - np.sqrt(5.0)) < 1e-9
        assert report["hit_0"].split() == ["0.5", "0", "0"] or float(
            report["hit_0"].split()[0]
        ) == pytest.approx(0.5, abs=1e-9)

    def test_mirror_command(self, tmp_path):
        text = (
            "[family]\nkind = point_source\napex = 0 0 0\naxis = 0 0 1\n"
            "domain = -0.002 0.002 -0.002 0.002\n"
            "[options]\nfocus = 0.3 0.2 1.2\nepsilon = 1\nlevel = 3.2\nwavefront_c = -1\n"
        )
        code, out = self.run(tmp_path, text, "mirror")
        assert code == 0
        report = read_report(out / "report.txt")
        assert report["focused"] == "true"
        assert float(report["max_miss"]) < 1e-6
        assert (out / "mirror.csv").read_text().startswith("k1,k2,x,y,z\n")

    def test_deterministic_reruns(self, tmp_path):
        text = (
            "[surface lens]\nkind = sphere\ncenter = 0 0 0\nradius = 2\n"
            "[system]\ninterface = lens refract 1 1.5\n"
            "[family]\nkind = point_source\napex = 0 0 5\naxis = 0 0 -1\n"
            "domain = -0.15 0.15 -0.15 0.15\n[options]\nseed = 7\n"
        )
        scene_path = tmp_path / "scene.scene"
        scene_path.write_text(text)
        outputs = []
        for sub in ("a", "b"):
            out_dir = tmp_path / sub
            code = main(
                ["check-symplectic", "--scene", str(scene_path), "--out", str(out_dir)]
            )
            assert code == 0
            blob = b"".join(
                p.read_bytes() for p in sorted(out_dir.iterdir()) if p.is_file()
            )
            outputs.append(blob)
        assert outputs[0] == outputs[1]
