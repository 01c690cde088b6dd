from dataclasses import dataclass

import pytest

import ui_components


@dataclass
class FakeUpload:
    name: str
    data: bytes

    def getvalue(self):
        return self.data


@pytest.fixture
def errors(monkeypatch):
    shown = []
    monkeypatch.setattr(ui_components.st, "error", shown.append)
    return shown


class TestUploadText:
    def test_decodes_utf8(self, monkeypatch, errors):
        upload = FakeUpload("a.conll", "Zürich\tB-HumanSettlement\n".encode("utf-8"))
        monkeypatch.setattr(ui_components.st, "file_uploader", lambda *a, **k: upload)
        assert ui_components.upload_text("Corpus", "k") == "Zürich\tB-HumanSettlement\n"
        assert errors == []

    def test_invalid_bytes_report_an_error(self, monkeypatch, errors):
        upload = FakeUpload("latin.conll", "Zürich\tO\n".encode("latin-1"))
        monkeypatch.setattr(ui_components.st, "file_uploader", lambda *a, **k: upload)
        assert ui_components.upload_text("Corpus", "k") is None
        assert len(errors) == 1
        assert "latin.conll" in errors[0]

    def test_nothing_uploaded(self, monkeypatch, errors):
        monkeypatch.setattr(ui_components.st, "file_uploader", lambda *a, **k: None)
        assert ui_components.upload_text("Corpus", "k") is None
        assert errors == []
