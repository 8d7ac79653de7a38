"""Drive the HTTP stylization service programmatically.

Starts the service on a trained checkpoint (run demo 01 first), then
issues the same requests the web playground sends: health, limits, a
plain stylization, a strength-reduced one, and a validation failure.
"""

import pathlib
import threading
import urllib.request

from aesust.service import create_server

OUT = pathlib.Path(__file__).resolve().parent / "demo_out"


def multipart(fields: dict[str, str], files: dict[str, bytes]) -> tuple[bytes, str]:
    boundary = "demoboundary31415926"
    chunks = []
    for name, value in fields.items():
        chunks.append(
            f'--{boundary}\r\nContent-Disposition: form-data; name="{name}"\r\n\r\n{value}\r\n'.encode()
        )
    for name, blob in files.items():
        chunks.append(
            f'--{boundary}\r\nContent-Disposition: form-data; name="{name}"; '
            f'filename="{name}.png"\r\nContent-Type: image/png\r\n\r\n'.encode() + blob + b"\r\n"
        )
    chunks.append(f"--{boundary}--\r\n".encode())
    return b"".join(chunks), f"multipart/form-data; boundary={boundary}"


def post(url: str, body: bytes, content_type: str):
    request = urllib.request.Request(url, data=body,
                                     headers={"Content-Type": content_type})
    try:
        with urllib.request.urlopen(request) as response:
            return response.status, response.read()
    except urllib.error.HTTPError as err:
        return err.code, err.read()


def main():
    checkpoint = OUT / "stage2.aesu"
    if not checkpoint.exists():
        raise SystemExit("run demos/01_train_desk_profile.py first")
    server = create_server(str(checkpoint))
    threading.Thread(target=server.serve_forever, daemon=True).start()
    base = f"http://127.0.0.1:{server.server_address[1]}"
    print(f"service up at {base}")

    with urllib.request.urlopen(base + "/api/health") as r:
        print("health:", r.read().decode())
    with urllib.request.urlopen(base + "/api/limits") as r:
        print("limits:", r.read().decode())

    content = (OUT / "content" / "photo0.png").read_bytes()
    style = (OUT / "style" / "painting0.png").read_bytes()

    body, ctype = multipart({"alpha": "1.0"}, {"content": content, "style": style})
    status, png = post(base + "/api/stylize", body, ctype)
    (OUT / "service_full.png").write_bytes(png)
    print(f"full stylization: HTTP {status}, {len(png)} bytes -> service_full.png")

    body, ctype = multipart({"alpha": "0.3"}, {"content": content, "style": style})
    status, png = post(base + "/api/stylize", body, ctype)
    (OUT / "service_mild.png").write_bytes(png)
    print(f"mild stylization: HTTP {status}, {len(png)} bytes -> service_mild.png")

    body, ctype = multipart({"alpha": "5"}, {"content": content, "style": style})
    status, payload = post(base + "/api/stylize", body, ctype)
    print(f"invalid alpha: HTTP {status}, body {payload.decode()}")

    server.shutdown()


if __name__ == "__main__":
    main()
