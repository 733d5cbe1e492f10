"""ramkit 进程入口"""

import sys

from dotenv import load_dotenv

# 在读取 RAMKIT_THREADS 之前从 .env 加载环境变量
try:
    load_dotenv()
except Exception as e:  # noqa: BLE001
    # logger 还未配置，使用 print 输出警告
    print(f"Warning: Failed to load .env file: {e}. Continuing with environment variables...", file=sys.stderr)

from .presentation.cli import dispatch


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
