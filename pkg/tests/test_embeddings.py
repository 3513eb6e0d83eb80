import numpy as np
import pytest

from bidforge.errors import DimensionMismatch, FormatError, MissingFile
from bidforge.transport_metrics import EmbeddingTable, load_embeddings, save_embeddings

from conftest import random_table


@pytest.mark.parametrize("fmt", ["text", "binary"])
def test_roundtrip(tmp_path, fmt):
    table = random_table([f"word{i}" for i in range(50)], dim=8, seed=1)
    path = tmp_path / f"emb.{fmt}"
    save_embeddings(table, path, fmt)
    assert load_embeddings(path, fmt) == table


def test_binary_roundtrip_bit_exact(tmp_path):
    table = random_table(["alpha", "beta", "gamma"], dim=5, seed=2)
    path = tmp_path / "emb.bin"
    save_embeddings(table, path, "binary")
    loaded = load_embeddings(path, "binary")
    for word in table.vectors:
        assert loaded[word].tobytes() == table[word].tobytes()
    # writing the loaded table reproduces the file byte for byte
    second = tmp_path / "emb2.bin"
    save_embeddings(loaded, second, "binary")
    assert second.read_bytes() == path.read_bytes()


def test_unicode_words_roundtrip(tmp_path):
    table = random_table(["naïve", "кот", "schön"], dim=3, seed=3)
    for fmt in ("text", "binary"):
        path = tmp_path / f"u.{fmt}"
        save_embeddings(table, path, fmt)
        assert load_embeddings(path, fmt) == table


def test_text_header_example(tmp_path):
    path = tmp_path / "e.txt"
    path.write_text("3 2\na 1.0 2.0\nb 0.5 -1.5\nc 0.0 3.25\n")
    table = load_embeddings(path, "text")
    assert len(table) == 3 and table.dim == 2
    assert np.allclose(table["b"], [0.5, -1.5])


def test_text_dim_mismatch(tmp_path):
    path = tmp_path / "e.txt"
    path.write_text("1 3\nword 1.0 2.0\n")
    with pytest.raises(DimensionMismatch) as err:
        load_embeddings(path, "text")
    assert err.value.word == "word"


def test_text_count_mismatch(tmp_path):
    path = tmp_path / "e.txt"
    path.write_text("5 2\na 1.0 2.0\n")
    with pytest.raises(FormatError):
        load_embeddings(path, "text")


def test_binary_truncated_reports_offset(tmp_path):
    table = random_table(["one", "two"], dim=4, seed=4)
    path = tmp_path / "e.bin"
    save_embeddings(table, path, "binary")
    data = path.read_bytes()
    cut = len(data) - 9  # inside the last vector
    path.write_bytes(data[:cut])
    with pytest.raises(FormatError) as err:
        load_embeddings(path, "binary")
    assert err.value.offset > 0


def test_bad_header(tmp_path):
    path = tmp_path / "e.txt"
    path.write_text("not a header\n")
    with pytest.raises(FormatError) as err:
        load_embeddings(path, "text")
    assert err.value.offset == 0


def test_duplicate_word_first_wins(tmp_path, caplog):
    path = tmp_path / "e.txt"
    path.write_text("2 1\nsame 1.0\nsame 2.0\n")
    with caplog.at_level("WARNING"):
        table = load_embeddings(path, "text")
    assert table["same"][0] == 1.0
    assert any("duplicate" in rec.message for rec in caplog.records)


def test_missing_file():
    with pytest.raises(MissingFile):
        load_embeddings("/nope.txt", "text")


def test_bad_format_arg(tmp_path):
    path = tmp_path / "e.txt"
    path.write_text("0 1\n")
    with pytest.raises(ValueError):
        load_embeddings(path, "word2vec")


def test_add_rejects_wrong_dim():
    table = EmbeddingTable(dim=3)
    with pytest.raises(DimensionMismatch):
        table.add("w", np.zeros(4, dtype=np.float32))


def test_add_rejects_whitespace_words():
    table = EmbeddingTable(dim=2)
    for word in ("", "two words", "tab\tword", "line\nbreak"):
        with pytest.raises(ValueError):
            table.add(word, np.zeros(2, dtype=np.float32))
