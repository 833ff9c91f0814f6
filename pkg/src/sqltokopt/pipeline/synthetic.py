"""Seeded synthetic Oracle -> PostgreSQL corpus.

Each construct is rendered twice: as Oracle source (with the comments and
physical-storage clauses the dials ask for) and as its PostgreSQL rewrite
under a fixed rule set (types, NVL/DECODE/SYSDATE, ROWNUM, dual, PL/SQL
bodies wrapped in dollar quotes, triggers split into function + trigger).
Only constructs the rewriter covers are ever generated.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import List, Tuple

from sqltokopt.core.keywords import is_reserved
from sqltokopt.pipeline.corpus import MigrationCase

Pair = Tuple[str, str]

_WORDS = (
    "customer order invoice account product line status amount created updated region employee dept salary "
    "address payment ledger balance ship item code name total ref hist audit batch event score price qty note"
).split()
_STRINGS = ["ACTIVE", "CLOSED", "O''Brien", "-- not a comment", "a  b", "N/A", "/* kept */", "x;y", "PENDING"]
_COMMENTS = ["audit trail", "legacy column", "TODO: review", "owner: finance", "keep in sync", "see ticket"]
_PHYSICAL = [
    "TABLESPACE users", "PCTFREE 10", "PCTUSED 40", "INITRANS 2", "MAXTRANS 255",
    "STORAGE (INITIAL 64K NEXT 1M)", "LOGGING", "NOLOGGING", "COMPRESS", "NOCOMPRESS", "CACHE", "NOCACHE",
]
_SQL_KINDS = ("table", "index", "sequence", "view", "query", "dml")
_PLSQL_KINDS = ("procedure", "function", "block", "trigger", "table+procedure")


@dataclass(frozen=True)
class Dials:
    plsql_ratio: float = 0.4
    comment_density: float = 0.3
    storage_density: float = 0.5
    identifier_length: Tuple[int, int] = (3, 16)
    quoted_density: float = 0.1

    def __post_init__(self):
        for name in ("plsql_ratio", "comment_density", "storage_density", "quoted_density"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be within [0, 1]")
        lo, hi = self.identifier_length
        if not 1 <= lo <= hi:
            raise ValueError("identifier_length must be (min, max) with 1 <= min <= max")


class _Gen:
    def __init__(self, rng: random.Random, dials: Dials):
        self.rng = rng
        self.d = dials
        self.used: set = set()

    def chance(self, p: float) -> bool:
        return p > 0 and self.rng.random() < p

    # names -------------------------------------------------------------
    def ident(self, prefix: str = "") -> str:
        lo, hi = self.d.identifier_length
        target = self.rng.randint(lo, hi)
        for _ in range(50):
            parts = [prefix] if prefix else []
            while len("_".join(parts)) < target:
                parts.append(self.rng.choice(_WORDS))
            name = "_".join(parts)[:target].rstrip("_")
            if not name[0].isalpha():
                name = "t" + name[1:]
            if not is_reserved(name) and name not in self.used:
                self.used.add(name)
                return name
        name = f"{prefix or 'n'}_{len(self.used)}"
        self.used.add(name)
        return name

    def column_name(self) -> Pair:
        name = self.ident()
        if self.chance(self.d.quoted_density):
            return f'"{name.upper()}"', name
        return name, name

    # trivia ------------------------------------------------------------
    def line_comment(self) -> str:
        return f"-- {self.rng.choice(_COMMENTS)}\n" if self.chance(self.d.comment_density) else ""

    def block_comment(self) -> str:
        return f" /* {self.rng.choice(_COMMENTS)} */" if self.chance(self.d.comment_density) else ""

    def physical(self, choices=_PHYSICAL) -> str:
        if not self.chance(self.d.storage_density):
            return ""
        picked = self.rng.sample(choices, self.rng.randint(1, min(3, len(choices))))
        return " " + " ".join(picked)

    # values ------------------------------------------------------------
    def col_type(self) -> Pair:
        r = self.rng.randrange(7)
        if r == 0:
            p = self.rng.choice([5, 10, 12])
            return f"NUMBER({p})", f"NUMERIC({p})"
        if r == 1:
            p, s = self.rng.choice([(10, 2), (12, 4), (8, 3)])
            return f"NUMBER({p},{s})", f"NUMERIC({p},{s})"
        if r == 2:
            n = self.rng.choice([20, 50, 100, 255])
            return f"VARCHAR2({n})", f"VARCHAR({n})"
        if r == 3:
            return "DATE", "TIMESTAMP"
        if r == 4:
            return "CLOB", "TEXT"
        if r == 5:
            return "INTEGER", "INTEGER"
        return "NUMBER", "NUMERIC"

    def string(self) -> str:
        return f"'{self.rng.choice(_STRINGS)}'"

    def scalar(self, col: Pair) -> Pair:
        r = self.rng.randrange(4)
        if r == 0:
            n = str(self.rng.randint(0, 999))
            return f"NVL({col[0]}, {n})", f"COALESCE({col[1]}, {n})"
        if r == 1:
            s = self.string()
            return f"DECODE({col[0]}, 1, {s}, 'other')", f"CASE {col[1]} WHEN 1 THEN {s} ELSE 'other' END"
        if r == 2:
            return f"UPPER(TRIM({col[0]}))", f"UPPER(TRIM({col[1]}))"
        return col

    def condition(self, col: Pair) -> Pair:
        r = self.rng.randrange(6)
        if r == 0:
            n = self.rng.randint(1, 500)
            return f"{col[0]} = {n}", f"{col[1]} = {n}"
        if r == 1:
            s = self.string()
            return f"{col[0]} = {s}", f"{col[1]} = {s}"
        if r == 2:
            vals = ", ".join(str(self.rng.randint(1, 9)) for _ in range(3))
            return f"{col[0]} IN ({vals})", f"{col[1]} IN ({vals})"
        if r == 3:
            return f"{col[0]} IS NOT NULL", f"{col[1]} IS NOT NULL"
        if r == 4:
            n = self.rng.randint(1, 90)
            return f"{col[0]} > SYSDATE - {n}", f"{col[1]} > CURRENT_TIMESTAMP - INTERVAL '{n} days'"
        a, b = sorted(self.rng.sample(range(1, 100), 2))
        return f"{col[0]} BETWEEN {a} AND {b}", f"{col[1]} BETWEEN {a} AND {b}"

    # statements ----------------------------------------------------------
    def table(self) -> Tuple[Pair, str, List[Pair]]:
        name = self.ident("t" if self.chance(0.3) else "")
        cols = [self.column_name() for _ in range(self.rng.randint(2, 6))]
        ora_lines, pg_lines = [], []
        for i, col in enumerate(cols):
            ty = self.col_type()
            extra_o = extra_p = ""
            if i == 0:
                extra_o = extra_p = " PRIMARY KEY"
            elif self.chance(0.3):
                extra_o = extra_p = " NOT NULL"
            elif ty[0] == "DATE" and self.chance(0.5):
                extra_o, extra_p = " DEFAULT SYSDATE", " DEFAULT CURRENT_TIMESTAMP"
            ora_lines.append(f"  {col[0]} {ty[0]}{extra_o}{self.block_comment()}")
            pg_lines.append(f"  {col[1]} {ty[1]}{extra_p}")
        ora = f"{self.line_comment()}CREATE TABLE {name} (\n" + ",\n".join(ora_lines) + f"\n){self.physical()};"
        pg = f"CREATE TABLE {name} (\n" + ",\n".join(pg_lines) + "\n);"
        return (ora, pg), name, cols

    def index(self) -> Pair:
        (t_ora, t_pg), table, cols = self.table()
        name = self.ident("ix")
        picked = cols[: self.rng.randint(1, min(2, len(cols)))]
        phys = self.physical(["TABLESPACE idx", "PCTFREE 5", "NOLOGGING", "COMPRESS"])
        ora = (f"{t_ora}\n{self.line_comment()}CREATE INDEX {name} ON {table} "
               f"({', '.join(c[0] for c in picked)}){phys};")
        pg = f"{t_pg}\nCREATE INDEX {name} ON {table} ({', '.join(c[1] for c in picked)});"
        return ora, pg

    def sequence(self) -> Pair:
        (t_ora, t_pg), _, _ = self.table()
        name = self.ident("seq")
        start = self.rng.randint(1, 1000)
        phys = " NOCACHE" if self.chance(self.d.storage_density) else " CACHE 20"
        pg_tail = "" if phys == " NOCACHE" else " CACHE 20"
        ora = f"{t_ora}\n{self.line_comment()}CREATE SEQUENCE {name} START WITH {start} INCREMENT BY 1{phys};"
        pg = f"{t_pg}\nCREATE SEQUENCE {name} START WITH {start} INCREMENT BY 1{pg_tail};"
        return ora, pg

    def select(self, table: str, cols: List[Pair]) -> Pair:
        picked = self.rng.sample(cols, self.rng.randint(1, len(cols)))
        items_o, items_p = [], []
        for c in picked:
            e = self.scalar(c)
            if e != c:
                alias = self.ident("x")
                items_o.append(f"{e[0]} AS {alias}")
                items_p.append(f"{e[1]} AS {alias}")
            else:
                items_o.append(c[0])
                items_p.append(c[1])
        ora = f"SELECT {', '.join(items_o)}\nFROM {table}"
        pg = f"SELECT {', '.join(items_p)}\nFROM {table}"
        conds = [self.condition(self.rng.choice(cols)) for _ in range(self.rng.randint(0, 2))]
        limit = self.rng.randint(5, 50) if self.chance(0.25) else None
        where_o = [c[0] for c in conds] + ([f"ROWNUM <= {limit}"] if limit else [])
        where_p = [c[1] for c in conds]
        if where_o:
            ora += "\nWHERE " + "\n  AND ".join(where_o)
        if where_p:
            pg += "\nWHERE " + "\n  AND ".join(where_p)
        if limit is None and self.chance(0.4):
            key = self.rng.choice(cols)
            ora += f"\nORDER BY {key[0]}"
            pg += f"\nORDER BY {key[1]}"
        if limit is not None:
            pg += f"\nLIMIT {limit}"
        return ora, pg

    def query(self) -> Pair:
        _, table, cols = self.table()
        if self.chance(0.15):
            s = self.string()
            return f"{self.line_comment()}SELECT {s} || 'x', SYSDATE FROM dual;", f"SELECT {s} || 'x', CURRENT_TIMESTAMP;"
        ora, pg = self.select(table, cols)
        return f"{self.line_comment()}{ora};", f"{pg};"

    def view(self) -> Pair:
        _, table, cols = self.table()
        ora, pg = self.select(table, cols)
        name = self.ident("v")
        return f"{self.line_comment()}CREATE OR REPLACE VIEW {name} AS\n{ora};", f"CREATE OR REPLACE VIEW {name} AS\n{pg};"

    def dml_statement(self, table: str, cols: List[Pair], indent: str = "") -> Pair:
        r = self.rng.randrange(3)
        if r == 0:
            picked = cols[: self.rng.randint(1, len(cols))]
            vals_o, vals_p = [], []
            for _ in picked:
                k = self.rng.randrange(3)
                if k == 0:
                    vals_o.append("SYSDATE")
                    vals_p.append("CURRENT_TIMESTAMP")
                elif k == 1:
                    s = self.string()
                    vals_o.append(s)
                    vals_p.append(s)
                else:
                    n = str(self.rng.randint(0, 99))
                    vals_o.append(n)
                    vals_p.append(n)
            ora = (f"{indent}INSERT INTO {table} ({', '.join(c[0] for c in picked)})\n"
                   f"{indent}VALUES ({', '.join(vals_o)});")
            pg = (f"{indent}INSERT INTO {table} ({', '.join(c[1] for c in picked)})\n"
                  f"{indent}VALUES ({', '.join(vals_p)});")
            return ora, pg
        cond = self.condition(self.rng.choice(cols))
        if r == 1:
            col = self.rng.choice(cols)
            n = self.rng.randint(1, 9)
            return (f"{indent}UPDATE {table}\n{indent}SET {col[0]} = NVL({col[0]}, 0) + {n}\n{indent}WHERE {cond[0]};",
                    f"{indent}UPDATE {table}\n{indent}SET {col[1]} = COALESCE({col[1]}, 0) + {n}\n{indent}WHERE {cond[1]};")
        return (f"{indent}DELETE FROM {table}\n{indent}WHERE {cond[0]};",
                f"{indent}DELETE FROM {table}\n{indent}WHERE {cond[1]};")

    def dml(self) -> Pair:
        _, table, cols = self.table()
        ora, pg = self.dml_statement(table, cols)
        return self.line_comment() + ora, pg

    # PL/SQL --------------------------------------------------------------
    def plsql_statements(self, table: str, cols: List[Pair], var: str, depth: int = 0) -> Tuple[List[str], List[str]]:
        ind = "  " * (depth + 1)
        ora: List[str] = []
        pg: List[str] = []
        for _ in range(self.rng.randint(2, 4)):
            r = self.rng.randrange(7 if depth < 1 else 4)
            if r == 0:
                n = self.rng.randint(1, 9)
                ora.append(f"{ind}{var} := NVL({var}, 0) + {n};")
                pg.append(f"{ind}{var} := COALESCE({var}, 0) + {n};")
            elif r == 1:
                cond = self.condition(self.rng.choice(cols))
                ora.append(f"{ind}SELECT COUNT(*) INTO {var} FROM {table} WHERE {cond[0]};")
                pg.append(f"{ind}SELECT COUNT(*) INTO {var} FROM {table} WHERE {cond[1]};")
            elif r == 2:
                o, p = self.dml_statement(table, cols, ind)
                ora.append(o)
                pg.append(p)
            elif r == 3:
                s = self.string()
                ora.append(f"{ind}DBMS_OUTPUT.PUT_LINE({s} || {var});")
                pg.append(f"{ind}RAISE NOTICE '%', {s} || {var};")
            elif r == 4:
                n = self.rng.randint(1, 50)
                io, ip = self.plsql_statements(table, cols, var, depth + 1)
                eo, ep = self.plsql_statements(table, cols, var, depth + 1)
                ora += [f"{ind}IF {var} > {n} THEN"] + io + [f"{ind}ELSE"] + eo + [f"{ind}END IF;"]
                pg += [f"{ind}IF {var} > {n} THEN"] + ip + [f"{ind}ELSE"] + ep + [f"{ind}END IF;"]
            elif r == 5:
                n = self.rng.randint(2, 20)
                io, ip = self.plsql_statements(table, cols, var, depth + 1)
                ora += [f"{ind}FOR i IN 1..{n} LOOP"] + io + [f"{ind}END LOOP;"]
                pg += [f"{ind}FOR i IN 1..{n} LOOP"] + ip + [f"{ind}END LOOP;"]
            else:
                ora.append(f"{ind}COMMIT;")
            if self.chance(self.d.comment_density / 2):
                ora.append(f"{ind}-- {self.rng.choice(_COMMENTS)}")
        return ora, pg

    def handler(self, var: str) -> Tuple[List[str], List[str]]:
        if not self.chance(0.6):
            return [], []
        msg = self.string()
        if self.chance(0.5):
            ora = ["EXCEPTION", "  WHEN NO_DATA_FOUND THEN", f"    {var} := 0;", "  WHEN OTHERS THEN",
                   f"    RAISE_APPLICATION_ERROR(-20001, {msg});"]
            pg = ["EXCEPTION", "  WHEN NO_DATA_FOUND THEN", f"    {var} := 0;", "  WHEN OTHERS THEN",
                  f"    RAISE EXCEPTION {msg};"]
        else:
            ora = ["EXCEPTION", "  WHEN OTHERS THEN", "    NULL;"]
            pg = ["EXCEPTION", "  WHEN OTHERS THEN", "    NULL;"]
        return ora, pg

    def routine_parts(self, table: str, cols: List[Pair]):
        var = self.ident("v")
        ty = self.col_type()
        decl_o = [f"  {var} {ty[0]} := 0;"]
        decl_p = [f"  {var} {ty[1]} := 0;"]
        body_o, body_p = self.plsql_statements(table, cols, var)
        exc_o, exc_p = self.handler(var)
        return var, decl_o, decl_p, body_o, body_p, exc_o, exc_p

    def params(self) -> Tuple[List[str], List[str]]:
        out_o, out_p = [], []
        for _ in range(self.rng.randint(0, 3)):
            name = self.ident("p")
            ty = self.rng.choice([("NUMBER", "NUMERIC"), ("VARCHAR2", "VARCHAR"), ("DATE", "TIMESTAMP")])
            out_o.append(f"{name} IN {ty[0]}")
            out_p.append(f"{name} {ty[1]}")
        return out_o, out_p

    def procedure(self, table_pair=None) -> Pair:
        if table_pair is None:
            _, table, cols = self.table()
        else:
            table, cols = table_pair
        name = self.ident("prc")
        po, pp = self.params()
        var, do, dp, bo, bp, eo, ep = self.routine_parts(table, cols)
        sig_o = f"({', '.join(po)})" if po else ""
        sig_p = f"({', '.join(pp)})"
        ora = "\n".join([f"{self.line_comment()}CREATE OR REPLACE PROCEDURE {name}{sig_o} IS"] + do + ["BEGIN"]
                        + bo + eo + [f"END {name};", "/"])
        pg = "\n".join([f"CREATE OR REPLACE PROCEDURE {name}{sig_p}", "LANGUAGE plpgsql AS $$", "DECLARE"] + dp
                       + ["BEGIN"] + bp + ep + ["END;", "$$;"])
        return ora, pg

    def function(self) -> Pair:
        _, table, cols = self.table()
        name = self.ident("fn")
        po, pp = self.params()
        var, do, dp, bo, bp, eo, ep = self.routine_parts(table, cols)
        ret = self.rng.choice([("NUMBER", "NUMERIC"), ("INTEGER", "INTEGER")])
        sig_o = f"({', '.join(po)})" if po else ""
        sig_p = f"({', '.join(pp)})"
        ora = "\n".join([f"{self.line_comment()}CREATE OR REPLACE FUNCTION {name}{sig_o} RETURN {ret[0]} IS"] + do
                        + ["BEGIN"] + bo + [f"  RETURN {var};"] + eo + [f"END {name};", "/"])
        pg = "\n".join([f"CREATE OR REPLACE FUNCTION {name}{sig_p} RETURNS {ret[1]}", "LANGUAGE plpgsql AS $$",
                        "DECLARE"] + dp + ["BEGIN"] + bp + [f"  RETURN {var};"] + ep + ["END;", "$$;"])
        return ora, pg

    def block(self) -> Pair:
        _, table, cols = self.table()
        var, do, dp, bo, bp, eo, ep = self.routine_parts(table, cols)
        ora = "\n".join([f"{self.line_comment()}DECLARE"] + do + ["BEGIN"] + bo + eo + ["END;", "/"])
        pg = "\n".join(["DO $$", "DECLARE"] + dp + ["BEGIN"] + bp + ep + ["END $$;"])
        return ora, pg

    def trigger(self) -> Pair:
        _, table, cols = self.table()
        name = self.ident("trg")
        col = self.rng.choice(cols)
        event = self.rng.choice(["INSERT", "UPDATE", "INSERT OR UPDATE"])
        ora = "\n".join([
            f"{self.line_comment()}CREATE OR REPLACE TRIGGER {name}",
            f"BEFORE {event} ON {table}",
            "FOR EACH ROW",
            "BEGIN",
            f"  :NEW.{col[0]} := NVL(:NEW.{col[0]}, 0);",
            "END;",
            "/",
        ])
        pg = "\n".join([
            f"CREATE OR REPLACE FUNCTION {name}_fn() RETURNS TRIGGER",
            "LANGUAGE plpgsql AS $$",
            "BEGIN",
            f"  NEW.{col[1]} := COALESCE(NEW.{col[1]}, 0);",
            "  RETURN NEW;",
            "END;",
            "$$;",
            f"CREATE TRIGGER {name} BEFORE {event} ON {table}",
            f"FOR EACH ROW EXECUTE FUNCTION {name}_fn();",
        ])
        return ora, pg

    def table_and_procedure(self) -> Pair:
        (t_ora, t_pg), table, cols = self.table()
        p_ora, p_pg = self.procedure((table, cols))
        return f"{t_ora}\n{p_ora}", f"{t_pg}\n{p_pg}"

    def case(self) -> Pair:
        self.used = set()
        if self.chance(self.d.plsql_ratio):
            kind = self.rng.choice(_PLSQL_KINDS)
        else:
            kind = self.rng.choice(_SQL_KINDS)
        build = {
            "table": lambda: self.table()[0],
            "index": self.index,
            "sequence": self.sequence,
            "view": self.view,
            "query": self.query,
            "dml": self.dml,
            "procedure": self.procedure,
            "function": self.function,
            "block": self.block,
            "trigger": self.trigger,
            "table+procedure": self.table_and_procedure,
        }[kind]
        return build()


def generate_synthetic_corpus(seed: int, count: int, dials: Dials = Dials()) -> List[MigrationCase]:
    """Deterministic for (seed, count, dials)."""
    if count < 1:
        raise ValueError("count must be at least 1")
    rng = random.Random(seed)
    gen = _Gen(rng, dials)
    cases = []
    for i in range(count):
        ora, pg = gen.case()
        cases.append(MigrationCase(f"syn-{seed}-{i:04d}", ora, pg))
    return cases
