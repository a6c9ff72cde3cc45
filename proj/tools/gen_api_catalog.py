#!/usr/bin/env python3
"""Regenerate data/api_catalog.txt from a TypeScript lib.dom.d.ts.

Usage: gen_api_catalog.py <lib.dom.d.ts> <out.txt>

The catalog is the interface names of a fixed set of DOM/HTML DOM interfaces
followed by their members, deduplicated in first-seen order.
"""
import re
import sys

CORE = [
    "EventTarget", "Node", "Element", "HTMLElement", "Document", "Window",
    "Navigator", "Location", "History", "Storage", "XMLHttpRequest", "Event",
    "CSSStyleDeclaration", "DOMTokenList", "HTMLCanvasElement",
    "CanvasRenderingContext2D", "HTMLMediaElement", "HTMLVideoElement",
    "HTMLFormElement", "HTMLInputElement", "HTMLIFrameElement",
    "HTMLScriptElement", "HTMLImageElement", "HTMLAnchorElement", "Screen",
    "Performance", "MutationObserver", "IntersectionObserver", "Range",
    "Selection", "ParentNode", "ChildNode", "NonElementParentNode",
    "GlobalEventHandlers", "WindowOrWorkerGlobalScope", "DocumentOrShadowRoot",
    "ElementCSSInlineStyle", "Animatable", "InnerHTML", "MouseEvent",
    "KeyboardEvent", "WebSocket", "Response", "Request", "Headers", "URL",
    "URLSearchParams", "FormData", "Blob", "FileReader", "Crypto",
    "SubtleCrypto", "Geolocation", "ServiceWorkerContainer",
    "BroadcastChannel", "MessagePort", "Worker", "Notification", "IDBFactory",
    "CacheStorage", "Clipboard", "MediaDevices", "Text", "Attr",
    "NamedNodeMap", "NodeList", "HTMLCollectionBase", "DOMRect",
    "DOMRectReadOnly", "TouchEvent", "PointerEvent", "UIEvent", "CustomEvent",
    "MessageEvent", "PerformanceEntry", "PerformanceObserver",
    "ResizeObserver", "ShadowRoot", "CharacterData", "DocumentFragment",
    "HTMLSelectElement", "HTMLTextAreaElement", "HTMLButtonElement",
    "HTMLLinkElement", "HTMLMetaElement", "HTMLStyleElement",
    "HTMLTableElement", "AudioContext", "BaseAudioContext",
    "WebGLRenderingContextBase", "HTMLSourceElement", "HTMLObjectElement",
    "HTMLEmbedElement", "TextTrack", "MediaSource", "SourceBuffer",
    "RTCPeerConnection", "Permissions", "BatteryManager", "NavigatorID",
    "NavigatorLanguage", "NavigatorOnLine", "NavigatorStorage",
    "WindowSessionStorage", "WindowLocalStorage", "AnimationFrameProvider",
    "IDBDatabase", "IDBObjectStore", "IDBTransaction", "IDBRequest", "Image",
    "Option",
]

IFACE = re.compile(
    r"^interface (\w+)(?:<[^{]*?>)?(?: extends [^{]*)? \{\n(.*?)^\}", re.S | re.M)
MEMBER = re.compile(r"\s+(?:readonly )?([a-zA-Z_$][\w$]*)\??[(:<]")


def main():
    src = open(sys.argv[1], encoding="utf-8").read()
    members = {}
    for m in IFACE.finditer(src):
        names = members.setdefault(m.group(1), [])
        for line in m.group(2).split("\n"):
            mm = MEMBER.match(line)
            if mm:
                names.append(mm.group(1))

    out, seen = [], set()

    def add(name):
        if len(name) > 1 and name not in seen:
            seen.add(name)
            out.append(name)

    for iface in CORE:
        add(iface)
    for iface in CORE:
        for name in members.get(iface, []):
            add(name)

    with open(sys.argv[2], "w", encoding="utf-8") as f:
        f.write("# DOM / HTML DOM API names, extracted from TypeScript lib.dom.d.ts\n")
        f.write(f"# version: dom-api-v1-{len(out)}\n")
        for name in out:
            f.write(name + "\n")
    print(len(out))


if __name__ == "__main__":
    main()
