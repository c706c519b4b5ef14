import pytest
from hypothesis import given, strategies as st

from chartrec.errors import ParseError
from chartrec.tables import (
    FieldRole,
    FieldType,
    infer_field_type,
    make_table,
    schema_key,
    table_from_csv,
)


class TestInferFieldType:
    def test_integer_years(self):
        assert infer_field_type(["2019", "2020", "2021"]) is FieldType.YEAR

    def test_decimals(self):
        assert infer_field_type(["3.5", "7", "-1"]) is FieldType.DECIMAL

    def test_strings(self):
        assert infer_field_type(["US", "Japan", "England"]) is FieldType.STRING

    def test_iso_dates(self):
        assert infer_field_type(["2021-01-01", "2021-02-01"]) is FieldType.DATETIME
        assert infer_field_type(["2021-01-01T10:30", "2021-02-01 08:00"]) is FieldType.DATETIME

    def test_year_needs_range_and_cardinality(self):
        assert infer_field_type([str(v) for v in (999, 1500, 2000)]) is FieldType.DECIMAL
        assert infer_field_type(["1500.5", "1600.5"]) is FieldType.DECIMAL
        # >200 distinct integers in range are an index, not years
        many = [str(1000 + i) for i in range(250)]
        assert infer_field_type(many) is FieldType.DECIMAL

    def test_empty_and_missing(self):
        assert infer_field_type([]) is FieldType.UNKNOWN
        assert infer_field_type([None, None]) is FieldType.UNKNOWN

    def test_mixed_bag_is_unknown(self):
        assert infer_field_type(["a", "1", "b", "2"]) is FieldType.UNKNOWN

    def test_ninety_percent_rule(self):
        vals = ["1.5"] * 9 + ["oops"]
        assert infer_field_type(vals) is FieldType.DECIMAL

    @given(
        st.lists(
            st.one_of(st.none(), st.text(max_size=6), st.floats(allow_nan=False, allow_infinity=False)),
            max_size=30,
        )
    )
    def test_total_and_deterministic(self, values):
        assert infer_field_type(values) is infer_field_type(list(values))


class TestSchemaKey:
    def _table(self, headers, types, values_start=0.0):
        cols = [[values_start + i, values_start + i + 1] for i in range(len(headers))]
        return make_table("x", headers, cols, types=types)

    def test_same_schema_different_values(self):
        t1 = self._table(["a", "b"], [FieldType.DECIMAL, FieldType.DECIMAL], 0.0)
        t2 = self._table(["a", "b"], [FieldType.DECIMAL, FieldType.DECIMAL], 9.0)
        assert schema_key(t1) == schema_key(t2)

    def test_type_difference(self):
        t1 = self._table(["a", "b"], [FieldType.DECIMAL, FieldType.DECIMAL])
        t2 = self._table(["a", "b"], [FieldType.DECIMAL, FieldType.STRING])
        assert schema_key(t1) != schema_key(t2)

    def test_permuted_order(self):
        t1 = self._table(["a", "b"], [FieldType.DECIMAL, FieldType.STRING])
        t2 = self._table(["b", "a"], [FieldType.STRING, FieldType.DECIMAL])
        assert schema_key(t1) != schema_key(t2)

    def test_field_count(self):
        t1 = self._table(["a"], [FieldType.DECIMAL])
        t2 = self._table(["a", "b"], [FieldType.DECIMAL, FieldType.DECIMAL])
        assert schema_key(t1) != schema_key(t2)

    @given(st.lists(st.tuples(st.sampled_from(list(FieldType)), st.text(max_size=4)), min_size=1, max_size=5))
    def test_key_depends_only_on_schema(self, schema):
        headers = [h for _, h in schema]
        types = [t for t, _ in schema]
        t1 = make_table("a", headers, [[1.0]] * len(schema), types=types)
        t2 = make_table("b", headers, [[2.0]] * len(schema), types=types)
        assert schema_key(t1) == schema_key(t2)


class TestCsvIngestion:
    def test_headers_and_inference(self):
        table = table_from_csv("Year,Sales,Region\n2019,10.5,N\n2020,11.0,S\n")
        assert [f.header for f in table.fields] == ["Year", "Sales", "Region"]
        assert [f.field_type for f in table.fields] == [
            FieldType.YEAR,
            FieldType.DECIMAL,
            FieldType.STRING,
        ]
        assert table.n_rows == 2
        assert table.fields[1].values[0] == 10.5

    def test_missing_cells(self):
        table = table_from_csv("a,b\n1,\n2,3\n")
        assert table.fields[1].values == (None, 3.0)

    def test_leading_string_role(self):
        table = table_from_csv("Name,Score\nalpha,1\nbeta,2\n")
        assert table.fields[0].role is FieldRole.HEADER
        assert table.fields[1].role is FieldRole.VALUE

    def test_empty_csv(self):
        with pytest.raises(ParseError):
            table_from_csv("")


class TestTableInvariants:
    def test_rectangular(self):
        with pytest.raises(ParseError):
            make_table("bad", ["a", "b"], [[1], [1, 2]])

    def test_field_cap(self):
        from chartrec.errors import TooManyFields

        with pytest.raises(TooManyFields):
            make_table("big", [f"c{i}" for i in range(129)], [[1]] * 129)
