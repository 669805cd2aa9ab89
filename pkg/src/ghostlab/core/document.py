from __future__ import annotations

import os
from dataclasses import dataclass
from typing import BinaryIO, Union

from lxml import etree
from lxml.etree import _Element

from ghostlab.core.field import (
    ScalarAmplitudeField,
    SpectralField,
    from_scalar,
    to_scalar,
)
from ghostlab.core.lattice import WaveVector
from ghostlab.errors import DocumentError, FieldError

REPRESENTATION = "scalar-amplitude"

Source = Union[str, os.PathLike, BinaryIO]


@dataclass
class FieldDocument:
    truncation_radius_sq: int
    amplitudes: ScalarAmplitudeField

    def to_field(self) -> SpectralField:
        return from_scalar(self.amplitudes, self.truncation_radius_sq)


class FieldDocumentParser:
    """
    Streaming reader for field documents:

        <field truncation-radius-sq="5" representation="scalar-amplitude">
          <mode k1="1" k2="0" re="0.5" im="0"/>
          ...
        </field>
    """

    def parse(self, source: Source) -> FieldDocument:
        if isinstance(source, os.PathLike):
            source = os.fspath(source)
        tree = etree.iterparse(source, events=("start-ns", "end"))

        namespace_len = 0
        entries: dict[WaveVector, complex] = {}
        document = None

        try:
            for event, e in tree:
                if event == "end":
                    tag = e.tag[namespace_len:]
                    if tag == "mode":
                        k, value = self._parse_mode(e)
                        if k in entries:
                            raise DocumentError(f"Mode {k} listed twice")
                        entries[k] = value

                        # Keep memory flat on long documents
                        e.clear()
                        while e.getprevious() is not None:
                            del e.getparent()[0]
                    elif tag == "field":
                        document = self._parse_field(e, entries)
                elif event == "start-ns":
                    namespace_len = len(e[1]) + 2 if e[1] else 0
        except etree.XMLSyntaxError as exc:
            raise DocumentError(f"Malformed field document: {exc}") from exc

        if document is None:
            raise DocumentError("Missing <field> root element")
        return document

    def _parse_mode(self, element: _Element) -> tuple[WaveVector, complex]:
        try:
            k = WaveVector(int(element.get("k1")), int(element.get("k2")))
            value = complex(float(element.get("re")), float(element.get("im", "0")))
        except (TypeError, ValueError) as exc:
            raise DocumentError(
                f"Invalid <mode> attributes {dict(element.attrib)!r}"
            ) from exc
        return k, value

    def _parse_field(
        self, element: _Element, entries: dict[WaveVector, complex]
    ) -> FieldDocument:
        representation = element.get("representation", REPRESENTATION)
        if representation != REPRESENTATION:
            raise DocumentError(f"Unsupported representation '{representation}'")
        try:
            radius = int(element.get("truncation-radius-sq"))
        except (TypeError, ValueError) as exc:
            raise DocumentError("Missing or invalid truncation-radius-sq") from exc

        try:
            amplitudes = ScalarAmplitudeField.from_mapping(entries, radius)
        except FieldError as exc:
            raise DocumentError(f"Field document violates field invariants: {exc}") from exc
        if len(amplitudes.modes) and amplitudes.modes.max_norm_sq > radius:
            raise DocumentError("Mode outside the declared truncation radius")
        return FieldDocument(radius, amplitudes)


def format_float(value: float) -> str:
    return format(float(value), ".17g")


def build_document(u: SpectralField | ScalarAmplitudeField) -> _Element:
    amplitudes = to_scalar(u) if isinstance(u, SpectralField) else u
    root = etree.Element(
        "field",
        {
            "truncation-radius-sq": str(u.truncation_radius_sq),
            "representation": REPRESENTATION,
        },
    )
    for k, value in amplitudes.items():
        etree.SubElement(
            root,
            "mode",
            {
                "k1": str(k.k1),
                "k2": str(k.k2),
                "re": format_float(value.real),
                "im": format_float(value.imag),
            },
        )
    return root


def write_field_document(u: SpectralField | ScalarAmplitudeField, path) -> None:
    etree.ElementTree(build_document(u)).write(
        str(path), pretty_print=True, xml_declaration=True, encoding="utf-8"
    )


def field_document_bytes(u: SpectralField | ScalarAmplitudeField) -> bytes:
    return etree.tostring(
        build_document(u), pretty_print=True, xml_declaration=True, encoding="utf-8"
    )


def read_field(source: Source) -> SpectralField:
    return FieldDocumentParser().parse(source).to_field()
